use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde_json::{json, Value};

use super::{parse_response, ChatBackend, ChatRequest, ChatResponse, GatewayError, Result, Role};

pub const ENV_ENDPOINT: &str = "CREWLAB_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "CREWLAB_LLM_API_KEY";
pub const ENV_MODEL: &str = "CREWLAB_LLM_MODEL";
const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

/// Chat-completions client. `endpoint` is the full URL of the completions
/// route, e.g. `https://api.openai.com/v1/chat/completions`.
pub struct LiveBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    model: String,
    calls: AtomicUsize,
}

impl LiveBackend {
    pub fn new(endpoint: &str, api_key: Option<String>, model: &str, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.to_string(),
            api_key,
            model: model.to_string(),
            calls: AtomicUsize::new(0),
        })
    }

    pub fn from_env() -> Result<Self> {
        let endpoint =
            std::env::var(ENV_ENDPOINT).map_err(|_| GatewayError::Config(format!("{ENV_ENDPOINT} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| DEFAULT_MODEL.to_string());
        Self::new(&endpoint, std::env::var(ENV_API_KEY).ok(), &model, Duration::from_secs(120))
    }

    fn wire_body(&self, request: &ChatRequest) -> Value {
        let messages: Vec<Value> = request
            .messages
            .iter()
            .map(|m| {
                // observations travel as user turns; plain chat APIs reject
                // tool messages without call ids
                let (role, content) = match m.role {
                    Role::System => ("system", m.content.clone()),
                    Role::User => ("user", m.content.clone()),
                    Role::Assistant => ("assistant", m.content.clone()),
                    Role::Tool => ("user", m.content.clone()),
                };
                json!({"role": role, "content": content})
            })
            .collect();
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature.unwrap_or(0.3),
        })
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut req = self.client.post(&self.endpoint).json(&self.wire_body(request));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Transport(format!("HTTP {status}: {body}")));
        }
        let v: Value = serde_json::from_str(&body)
            .map_err(|e| GatewayError::MalformedResponse(format!("response is not JSON: {e}")))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| GatewayError::MalformedResponse("missing choices[0].message.content".into()))?;
        parse_response(content)
    }

    fn network_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Message;

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        // port 9 on localhost: nothing listens there in the sandbox
        let b = LiveBackend::new("http://127.0.0.1:9/v1/chat/completions", None, "m", Duration::from_secs(5)).unwrap();
        let r = b.complete(&ChatRequest::new(vec![Message::new(Role::User, "hi")]));
        assert!(matches!(r, Err(GatewayError::Transport(_))));
        assert_eq!(b.network_calls(), 1);
    }
}
