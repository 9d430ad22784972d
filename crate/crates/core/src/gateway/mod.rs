//! Chat-completion gateway: one request/response shape over live, replay,
//! record and scripted backends, with guardrails applied on the way out.

mod fingerprint;
mod guardrails;
mod live;
mod parse;
mod scripted;
mod transcript;

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub use fingerprint::{fingerprint, normalize_text};
pub use guardrails::{clamp_guardrails, GuardrailPolicy, GUARDRAIL_PREFIX};
pub use live::{LiveBackend, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};
pub use parse::{parse_action, parse_response, section};
pub use scripted::{FnBackend, ScriptedBackend};
pub use transcript::{RecordBackend, ReplayBackend, Transcript, TranscriptEntry};

/// Headings that structure the user prompt of every agent turn.
pub mod sections {
    pub const TASK: &str = "### Task";
    pub const EXPECTED: &str = "### Expected Output";
    pub const CONTEXT: &str = "### Context";
    pub const COWORKER: &str = "### Assigned Coworker";
    pub const SUGGESTED: &str = "### Suggested Action";
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("gateway transport error: {0}")]
    Transport(String),
    #[error("no recorded response for request fingerprint {fingerprint}")]
    ReplayMiss { fingerprint: String },
    #[error("malformed model response: {0}")]
    MalformedResponse(String),
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
    #[error("gateway configuration: {0}")]
    Config(String),
    #[error("transcript {path} line {line}: {reason}")]
    Transcript { path: String, line: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GatewayError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub id: String,
    pub name: String,
    pub description: String,
    /// (field name, description)
    pub fields: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub temperature: Option<f64>,
    pub tool_schemas: Vec<ToolSchema>,
}

impl ChatRequest {
    pub fn new(messages: Vec<Message>) -> Self {
        Self { messages, temperature: None, tool_schemas: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        if let Some(t) = self.temperature {
            if !(0.0..=1.0).contains(&t) {
                return Err(GatewayError::InvalidRequest(format!("temperature {t} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&Message> {
        self.messages.last()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChatResponse {
    Final { text: String },
    ToolCall { tool_id: String, tool_input: Map<String, Value> },
}

impl ChatResponse {
    pub fn final_text(text: impl Into<String>) -> Self {
        ChatResponse::Final { text: text.into() }
    }

    pub fn tool_call(tool_id: impl Into<String>, input: Value) -> Self {
        let tool_input = match input {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("input".into(), other);
                m
            }
        };
        ChatResponse::ToolCall { tool_id: tool_id.into(), tool_input }
    }

    /// "Action:" rendering used when the call is echoed back to the model.
    pub fn render(&self) -> String {
        match self {
            ChatResponse::Final { text } => format!("Final Answer: {text}"),
            ChatResponse::ToolCall { tool_id, tool_input } => format!(
                "Action: {tool_id}\nAction Input: {}",
                serde_json::to_string(tool_input).expect("map serializes")
            ),
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse>;

    /// Requests that left the process.
    fn network_calls(&self) -> usize {
        0
    }
}

/// Backend plus guardrail policy; the entry point agents call.
pub struct Gateway {
    backend: Box<dyn ChatBackend>,
    policy: GuardrailPolicy,
    calls: AtomicUsize,
}

impl Gateway {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        Self { backend, policy: GuardrailPolicy::default(), calls: AtomicUsize::new(0) }
    }

    pub fn with_policy(mut self, policy: GuardrailPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn policy(&self) -> &GuardrailPolicy {
        &self.policy
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let request = clamp_guardrails(request, &self.policy);
        request.validate()?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.backend.complete(&request)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn network_calls(&self) -> usize {
        self.backend.network_calls()
    }
}
