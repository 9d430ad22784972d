use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{Map, Value};
use thiserror::Error;

use super::{Artifact, TaskOutput};
use crate::gateway::ToolSchema;
use crate::memory::MemoryStore;

/// Tool id the runtime handles itself for manager delegation.
pub const DELEGATE_TOOL_ID: &str = "delegate_work";
pub const DELEGATE_TOOL_NAME: &str = "Delegate work to coworker";

#[derive(Debug, Clone, PartialEq)]
pub struct ToolOutput {
    pub text: String,
    pub artifacts: Vec<Artifact>,
}

impl ToolOutput {
    pub fn text(text: impl Into<String>) -> Self {
        Self { text: text.into(), artifacts: Vec::new() }
    }

    pub fn with_artifact(mut self, name: &str, path: &str) -> Self {
        self.artifacts.push(Artifact { name: name.to_string(), path: path.to_string() });
        self
    }
}

/// A failed tool call. Recoverable errors are shown to the agent as an
/// observation; fatal ones abort the task.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{message}")]
pub struct ToolError {
    pub message: String,
    pub fatal: bool,
}

impl ToolError {
    pub fn recoverable(message: impl Into<String>) -> Self {
        Self { message: message.into(), fatal: false }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        Self { message: message.into(), fatal: true }
    }
}

/// What a tool may see while it runs.
pub struct ToolContext<'a> {
    pub workdir: &'a Path,
    pub seed: u64,
    pub task_id: &'a str,
    pub agent_role: &'a str,
    pub completed: &'a [TaskOutput],
    pub memory: &'a MemoryStore,
}

impl ToolContext<'_> {
    /// Paths in tool inputs are relative to the run directory.
    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.workdir.join(p)
        }
    }
}

pub trait Tool: Send + Sync {
    fn id(&self) -> &str;
    /// Human name, as an agent might write it after "Action:".
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    /// (field, description) pairs of the input object.
    fn fields(&self) -> Vec<(&'static str, &'static str)>;
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> Result<ToolOutput, ToolError>;
}

#[derive(Clone, Default)]
pub struct ToolCatalog {
    tools: Vec<Arc<dyn Tool>>,
}

impl ToolCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, tool: impl Tool + 'static) -> &mut Self {
        self.tools.push(Arc::new(tool));
        self
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn Tool>> {
        self.tools.iter().find(|t| t.id() == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        id == DELEGATE_TOOL_ID || self.get(id).is_some()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.tools.iter().map(|t| t.id()).collect()
    }

    /// Finds a tool among `allowed` by id or display name, ignoring case.
    pub fn resolve(&self, name: &str, allowed: &[String]) -> Option<&Arc<dyn Tool>> {
        let n = name.trim().to_lowercase();
        self.tools
            .iter()
            .filter(|t| allowed.iter().any(|a| a == t.id()))
            .find(|t| t.id().to_lowercase() == n || t.name().to_lowercase() == n)
    }

    pub fn schema(tool: &dyn Tool) -> ToolSchema {
        ToolSchema {
            id: tool.id().to_string(),
            name: tool.name().to_string(),
            description: tool.description().to_string(),
            fields: tool.fields().into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }
}

pub fn is_delegate_name(name: &str) -> bool {
    let n = name.trim().to_lowercase();
    n == DELEGATE_TOOL_ID || n == DELEGATE_TOOL_NAME.to_lowercase()
}

pub fn delegate_schema(coworkers: &[&str]) -> ToolSchema {
    ToolSchema {
        id: DELEGATE_TOOL_ID.to_string(),
        name: DELEGATE_TOOL_NAME.to_string(),
        description: format!(
            "Delegate a task to one of your coworkers: {}. Give the full task and all context they need.",
            coworkers.join(", ")
        ),
        fields: vec![
            ("task".into(), "the task to delegate".into()),
            ("context".into(), "everything the coworker needs to know".into()),
            ("coworker".into(), "exact role of the coworker".into()),
        ],
    }
}

// Input accessors shared by the tool implementations.

pub fn str_field<'a>(input: &'a Map<String, Value>, key: &str) -> Result<&'a str, ToolError> {
    match input.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(ToolError::recoverable(format!("field '{key}' must be a string"))),
        None => Err(ToolError::recoverable(format!("missing field '{key}'"))),
    }
}

pub fn opt_str<'a>(input: &'a Map<String, Value>, key: &str) -> Option<&'a str> {
    input.get(key).and_then(Value::as_str)
}

pub fn opt_f64(input: &Map<String, Value>, key: &str) -> Result<Option<f64>, ToolError> {
    match input.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => Ok(n.as_f64()),
        Some(Value::String(s)) => {
            s.trim().parse().map(Some).map_err(|_| ToolError::recoverable(format!("field '{key}' must be a number")))
        }
        Some(_) => Err(ToolError::recoverable(format!("field '{key}' must be a number"))),
    }
}

pub fn opt_bool(input: &Map<String, Value>, key: &str) -> Result<Option<bool>, ToolError> {
    match input.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Bool(b)) => Ok(Some(*b)),
        Some(Value::String(s)) => match s.trim().to_lowercase().as_str() {
            "true" | "yes" => Ok(Some(true)),
            "false" | "no" => Ok(Some(false)),
            _ => Err(ToolError::recoverable(format!("field '{key}' must be a boolean"))),
        },
        Some(_) => Err(ToolError::recoverable(format!("field '{key}' must be a boolean"))),
    }
}

/// A list of strings, also accepting one comma-separated string.
pub fn str_list(input: &Map<String, Value>, key: &str) -> Result<Vec<String>, ToolError> {
    match input.get(key) {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| ToolError::recoverable(format!("field '{key}' must list strings")))
            })
            .collect(),
        Some(Value::String(s)) => {
            Ok(s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect())
        }
        Some(_) => Err(ToolError::recoverable(format!("field '{key}' must be a list"))),
    }
}
