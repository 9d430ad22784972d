use serde_json::json;

use super::{parse_action, section, sections, ChatBackend, ChatRequest, ChatResponse, Result, Role};

/// Tool id the runtime intercepts for manager delegation.
const DELEGATE: &str = "delegate_work";

/// Deterministic stand-in for a model. It reads the prompt sections the
/// runtime writes:
///
/// * after an observation, it answers with the observation text;
/// * a manager prompt (an `Assigned Coworker` section and the delegate tool)
///   delegates the task to that coworker;
/// * a worker prompt with a `Suggested Action` section calls that tool;
/// * anything else gets a short acknowledgement naming the task.
#[derive(Debug, Default, Clone, Copy)]
pub struct ScriptedBackend;

impl ScriptedBackend {
    pub fn new() -> Self {
        Self
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let last = request.last().expect("validated request");
        if last.role == Role::Tool {
            let text = last.content.strip_prefix("Observation:").unwrap_or(&last.content).trim();
            return Ok(ChatResponse::final_text(text));
        }
        let prompt = request.messages.iter().rev().find(|m| m.role == Role::User).map_or("", |m| m.content.as_str());
        let can_delegate = request.tool_schemas.iter().any(|t| t.id == DELEGATE);
        if can_delegate {
            if let Some(coworker) = section(prompt, sections::COWORKER) {
                return Ok(ChatResponse::tool_call(
                    DELEGATE,
                    json!({
                        "task": section(prompt, sections::TASK).unwrap_or_default(),
                        "context": section(prompt, sections::CONTEXT).unwrap_or_default(),
                        "coworker": coworker,
                    }),
                ));
            }
        }
        if let Some(action) = section(prompt, sections::SUGGESTED) {
            return parse_action(&action);
        }
        let task = section(prompt, sections::TASK).unwrap_or_default();
        let first = task.lines().next().unwrap_or("the task").trim();
        Ok(ChatResponse::final_text(format!("Completed: {first}")))
    }
}

/// Backend driven by a closure; handy for tests.
pub struct FnBackend<F> {
    f: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<ChatResponse> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<ChatResponse> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        (self.f)(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Message, ToolSchema};

    fn schema(id: &str) -> ToolSchema {
        ToolSchema { id: id.into(), name: id.into(), description: String::new(), fields: vec![] }
    }

    #[test]
    fn manager_delegates_worker_acts_then_answers() {
        let b = ScriptedBackend::new();
        let prompt = "### Task\nRun EDA\n\n### Assigned Coworker\nSenior Data Scientist I\n";
        let mut req = ChatRequest::new(vec![Message::new(Role::User, prompt)]);
        req.tool_schemas.push(schema(DELEGATE));
        match b.complete(&req).unwrap() {
            ChatResponse::ToolCall { tool_id, tool_input } => {
                assert_eq!(tool_id, DELEGATE);
                assert_eq!(tool_input["coworker"], "Senior Data Scientist I");
                assert_eq!(tool_input["task"], "Run EDA");
            }
            other => panic!("{other:?}"),
        }
        let worker =
            "### Task\nRun EDA\n\n### Suggested Action\nAction: eda\nAction Input: {\"csv_path\": \"data.csv\"}\n";
        let mut req = ChatRequest::new(vec![Message::new(Role::User, worker)]);
        assert_eq!(b.complete(&req).unwrap(), ChatResponse::tool_call("eda", json!({"csv_path": "data.csv"})));
        req.messages.push(Message::new(Role::Tool, "Observation: report"));
        assert_eq!(b.complete(&req).unwrap(), ChatResponse::final_text("report"));
    }
}
