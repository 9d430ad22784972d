//! Crew runtime: crew validation, hierarchical or sequential task execution,
//! the agent loop, delegation, and output aggregation.

mod prompt;
mod runtime;
mod tools;

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::memory::MemoryError;

pub use prompt::{render_placeholders, render_value, system_prompt, user_prompt};
pub use runtime::{
    aggregate, build_crew, delegate, execute_task, run_crew, Crew, Delegation, RunEnv, RunLog, TaskDeps,
};
pub use tools::{
    delegate_schema, is_delegate_name, opt_bool, opt_f64, opt_str, str_field, str_list, Tool, ToolCatalog, ToolContext,
    ToolError, ToolOutput, DELEGATE_TOOL_ID, DELEGATE_TOOL_NAME,
};

pub const DEFAULT_MAX_ITERATIONS: usize = 5;
/// Characters of prior task output passed to the next task.
pub const DEFAULT_CONTEXT_BUDGET: usize = 8000;

#[derive(Debug, Error)]
pub enum CrewError {
    #[error("crew has no tasks")]
    EmptyCrew,
    #[error("agent '{agent}' references unknown tool '{tool}'")]
    UnknownTool { agent: String, tool: String },
    #[error("duplicate agent role '{0}'")]
    DuplicateRole(String),
    #[error("hierarchical crew needs a manager")]
    MissingManager,
    #[error("task '{task}' depends on '{reference}', which is not an earlier task")]
    TaskCycle { task: String, reference: String },
    #[error("duplicate task id '{0}'")]
    DuplicateTask(String),
    #[error("task '{task}' is assigned to unknown agent '{agent}'")]
    UnknownAgent { task: String, agent: String },
    #[error("agent '{role}': {reason}")]
    InvalidAgent { role: String, reason: String },
    #[error("task '{task}' uses placeholder '{{{name}}}' but no input supplies it")]
    PlaceholderMissing { task: String, name: String },
    #[error("agent '{role}' reached {max_iterations} iterations without a final answer")]
    AgentLoopExceeded { role: String, max_iterations: usize },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no coworker named '{0}'")]
    UnknownCoworker(String),
    #[error("manager finished task '{task}' without delegating it")]
    NoDelegation { task: String },
    #[error("tool '{tool}' failed: {message}")]
    ToolFailed { tool: String, message: String },
    #[error("no task outputs to aggregate")]
    EmptyOutputs,
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("crew aborted at task '{task_id}': {source}")]
    Aborted { task_id: String, source: Box<CrewError>, partial: Box<CrewOutput> },
}

impl CrewError {
    /// The underlying error of an abort.
    pub fn root(&self) -> &CrewError {
        match self {
            CrewError::Aborted { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, CrewError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub role: String,
    pub goal: String,
    pub backstory: String,
    #[serde(default)]
    pub tool_ids: Vec<String>,
    #[serde(default)]
    pub allow_delegation: bool,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}

impl AgentSpec {
    pub fn new(role: &str, goal: &str, backstory: &str) -> Self {
        Self {
            role: role.to_string(),
            goal: goal.to_string(),
            backstory: backstory.to_string(),
            tool_ids: Vec::new(),
            allow_delegation: false,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn with_tools(mut self, ids: &[&str]) -> Self {
        self.tool_ids = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn delegating(mut self) -> Self {
        self.allow_delegation = true;
        self
    }
}

/// Tool call the worker is pointed at; placeholders in string values are
/// rendered like the description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolHint {
    pub tool_id: String,
    pub input: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub description: String,
    pub expected_output: String,
    #[serde(default)]
    pub assigned_agent: Option<String>,
    #[serde(default)]
    pub context_task_ids: Vec<String>,
    #[serde(default)]
    pub tool_hint: Option<ToolHint>,
}

impl TaskSpec {
    pub fn new(id: &str, description: &str, expected_output: &str) -> Self {
        Self {
            id: id.to_string(),
            description: description.to_string(),
            expected_output: expected_output.to_string(),
            assigned_agent: None,
            context_task_ids: Vec::new(),
            tool_hint: None,
        }
    }

    pub fn assigned(mut self, role: &str) -> Self {
        self.assigned_agent = Some(role.to_string());
        self
    }

    pub fn after(mut self, ids: &[&str]) -> Self {
        self.context_task_ids = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn hint(mut self, tool_id: &str, input: Value) -> Self {
        self.tool_hint = Some(ToolHint { tool_id: tool_id.to_string(), input });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Hierarchical,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrewSpec {
    pub name: String,
    pub agents: Vec<AgentSpec>,
    pub tasks: Vec<TaskSpec>,
    pub process: Process,
    #[serde(default)]
    pub manager: Option<AgentSpec>,
}

impl CrewSpec {
    pub fn agent(&self, role: &str) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.role == role)
    }

    /// Checks the crew against `catalog`.
    pub fn validate(&self, catalog: &ToolCatalog) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(CrewError::EmptyCrew);
        }
        if self.process == Process::Hierarchical && self.manager.is_none() {
            return Err(CrewError::MissingManager);
        }
        let mut roles = HashSet::new();
        for a in self.agents.iter().chain(self.manager.iter()) {
            if a.role.trim().is_empty() {
                return Err(CrewError::InvalidAgent { role: a.role.clone(), reason: "empty role".into() });
            }
            if a.max_iterations == 0 {
                return Err(CrewError::InvalidAgent {
                    role: a.role.clone(),
                    reason: "max_iterations must be >= 1".into(),
                });
            }
            if !roles.insert(a.role.as_str()) {
                return Err(CrewError::DuplicateRole(a.role.clone()));
            }
            for t in &a.tool_ids {
                if !catalog.contains(t) {
                    return Err(CrewError::UnknownTool { agent: a.role.clone(), tool: t.clone() });
                }
            }
        }
        let mut seen = HashSet::new();
        for task in &self.tasks {
            for dep in &task.context_task_ids {
                if !seen.contains(dep.as_str()) {
                    return Err(CrewError::TaskCycle { task: task.id.clone(), reference: dep.clone() });
                }
            }
            if !seen.insert(task.id.as_str()) {
                return Err(CrewError::DuplicateTask(task.id.clone()));
            }
            if let Some(agent) = &task.assigned_agent {
                if self.agent(agent).is_none() {
                    return Err(CrewError::UnknownAgent { task: task.id.clone(), agent: agent.clone() });
                }
            }
            if let Some(h) = &task.tool_hint {
                if !catalog.contains(&h.tool_id) {
                    return Err(CrewError::UnknownTool { agent: task.id.clone(), tool: h.tool_id.clone() });
                }
            }
        }
        Ok(())
    }
}

/// A file produced by a tool, relative to the run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub tool_id: String,
    pub input_digest: String,
    pub output_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutput {
    pub task_id: String,
    pub agent_role: String,
    pub raw_text: String,
    pub artifacts: Vec<Artifact>,
    pub tool_trace: Vec<TraceEntry>,
}

/// Artifact index entry; `task_id` is the last task that wrote the path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub path: String,
    pub task_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrewOutput {
    pub task_outputs: Vec<TaskOutput>,
    pub artifacts: Vec<ArtifactRecord>,
    pub started_at: String,
    pub finished_at: String,
    pub failed: bool,
}

impl CrewOutput {
    pub fn output(&self, task_id: &str) -> Option<&TaskOutput> {
        self.task_outputs.iter().find(|o| o.task_id == task_id)
    }
}

/// Short hex SHA-256 digest used in tool traces.
pub fn digest(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// Inputs that fill task placeholders, e.g. `csv_path`.
pub type Inputs = BTreeMap<String, String>;

/// Where run-level files go.
pub fn run_log_path(dir: &std::path::Path) -> PathBuf {
    dir.join("run_log.jsonl")
}
