use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::prompt::{render_placeholders, render_value, system_prompt, user_prompt};
use super::tools::{delegate_schema, is_delegate_name, ToolCatalog, ToolContext, DELEGATE_TOOL_ID};
use super::{
    digest, AgentSpec, ArtifactRecord, CrewError, CrewOutput, CrewSpec, Inputs, Process, Result, TaskOutput, TaskSpec,
    ToolHint, TraceEntry, DEFAULT_CONTEXT_BUDGET,
};
use crate::gateway::{ChatRequest, ChatResponse, Gateway, Message, Role};
use crate::memory::{MemoryStore, RecordKind};

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Where tools read and write, and the seed for their random streams.
#[derive(Debug, Clone)]
pub struct RunEnv {
    pub workdir: PathBuf,
    pub seed: u64,
}

impl RunEnv {
    pub fn new(workdir: &Path, seed: u64) -> Self {
        Self { workdir: workdir.to_path_buf(), seed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delegation {
    pub task_id: String,
    pub coworker: String,
}

/// Append-only event log, one JSON object per line.
pub struct RunLog {
    out: BufWriter<File>,
}

impl RunLog {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(Self { out: BufWriter::new(File::create(path)?) })
    }

    fn event(&mut self, mut v: Value) {
        v["ts"] = Value::String(now());
        // the log is diagnostic; a failed write must not fail the run
        let _ = writeln!(self.out, "{v}");
    }

    fn flush(&mut self) {
        let _ = self.out.flush();
    }
}

/// Everything an agent loop borrows from the crew run.
pub struct TaskDeps<'a> {
    pub gateway: &'a Gateway,
    pub catalog: &'a ToolCatalog,
    pub memory: &'a mut MemoryStore,
    pub env: &'a RunEnv,
    pub completed: &'a [TaskOutput],
    pub log: Option<&'a mut RunLog>,
}

impl TaskDeps<'_> {
    fn log(&mut self, v: Value) {
        if let Some(l) = self.log.as_deref_mut() {
            l.event(v);
        }
    }
}

fn observation(text: &str) -> Message {
    Message::new(Role::Tool, format!("Observation: {text}"))
}

/// Runs one agent loop: the agent either calls one of its tools (the result
/// comes back as an observation) or gives a final answer. At most
/// `max_iterations` gateway calls are made.
pub fn execute_task(
    agent: &AgentSpec,
    task_id: &str,
    task_text: &str,
    expected_output: &str,
    context: &str,
    hint: Option<&ToolHint>,
    deps: &mut TaskDeps,
) -> Result<TaskOutput> {
    let tools: Vec<_> = agent.tool_ids.iter().filter_map(|id| deps.catalog.get(id).cloned()).collect();
    let schemas: Vec<_> = tools.iter().map(|t| ToolCatalog::schema(t.as_ref())).collect();
    if !context.trim().is_empty() {
        deps.memory.store(&agent.role, task_id, RecordKind::Context, context, &[])?;
    }
    let mut messages = vec![
        Message::new(Role::System, system_prompt(agent, &schemas)),
        Message::new(Role::User, user_prompt(task_text, expected_output, context, None, hint)),
    ];
    let mut trace = Vec::new();
    let mut artifacts = Vec::new();
    for _ in 0..agent.max_iterations {
        let request = ChatRequest { messages: messages.clone(), temperature: None, tool_schemas: schemas.clone() };
        let response = deps.gateway.complete(&request)?;
        let (tool_id, tool_input) = match &response {
            ChatResponse::Final { text } => {
                return Ok(TaskOutput {
                    task_id: task_id.to_string(),
                    agent_role: agent.role.clone(),
                    raw_text: text.clone(),
                    artifacts,
                    tool_trace: trace,
                });
            }
            ChatResponse::ToolCall { tool_id, tool_input } => (tool_id, tool_input),
        };
        let input_json = serde_json::to_string(tool_input).expect("map serializes");
        let (resolved, obs, failed) = match deps.catalog.resolve(tool_id, &agent.tool_ids) {
            None => {
                let ids: Vec<&str> = tools.iter().map(|t| t.id()).collect();
                let msg =
                    format!("Error: tool '{tool_id}' is not available to you. Available tools: {}.", ids.join(", "));
                (tool_id.clone(), msg, true)
            }
            Some(tool) => {
                let id = tool.id().to_string();
                deps.memory.store(&agent.role, task_id, RecordKind::ToolInput, &format!("{id} {input_json}"), &[])?;
                let ctx = ToolContext {
                    workdir: &deps.env.workdir,
                    seed: deps.env.seed,
                    task_id,
                    agent_role: &agent.role,
                    completed: deps.completed,
                    memory: deps.memory,
                };
                match tool.call(tool_input, &ctx) {
                    Ok(out) => {
                        artifacts.extend(out.artifacts);
                        (id, out.text, false)
                    }
                    Err(e) if e.fatal => {
                        deps.log(json!({"event": "tool", "task_id": task_id, "agent": agent.role, "tool_id": id,
                            "input_digest": digest(&input_json), "error": e.message, "fatal": true}));
                        return Err(CrewError::ToolFailed { tool: id, message: e.message });
                    }
                    Err(e) => (id, format!("Error: {}", e.message), true),
                }
            }
        };
        let entry = TraceEntry { tool_id: resolved, input_digest: digest(&input_json), output_digest: digest(&obs) };
        deps.log(json!({"event": "tool", "task_id": task_id, "agent": agent.role, "tool_id": entry.tool_id,
            "input_digest": entry.input_digest, "output_digest": entry.output_digest, "error": failed}));
        trace.push(entry);
        messages.push(Message::new(Role::Assistant, response.render()));
        messages.push(observation(&obs));
    }
    Err(CrewError::AgentLoopExceeded { role: agent.role.clone(), max_iterations: agent.max_iterations })
}

/// Runs `request` (the delegate tool input: task, context, coworker) on the
/// named coworker. The task's tool hint goes along with it.
pub fn delegate(
    agents: &[AgentSpec],
    task: &TaskSpec,
    request: &Map<String, Value>,
    deps: &mut TaskDeps,
) -> Result<TaskOutput> {
    let name = request.get("coworker").and_then(Value::as_str).unwrap_or("").trim();
    let worker = agents
        .iter()
        .find(|a| a.role.eq_ignore_ascii_case(name))
        .ok_or_else(|| CrewError::UnknownCoworker(name.to_string()))?;
    let task_text =
        request.get("task").and_then(Value::as_str).filter(|s| !s.trim().is_empty()).unwrap_or(&task.description);
    let context = request.get("context").and_then(Value::as_str).unwrap_or("");
    let input_json = serde_json::to_string(request).expect("map serializes");
    deps.memory.store(&worker.role, &task.id, RecordKind::ActionInput, &input_json, &[])?;
    deps.log(json!({"event": "delegation", "task_id": task.id, "coworker": worker.role,
        "input_digest": digest(&input_json)}));
    execute_task(worker, &task.id, task_text, &task.expected_output, context, task.tool_hint.as_ref(), deps)
}

/// Orders outputs into a crew result; artifacts are listed once per path
/// (first position, last writer).
pub fn aggregate(outputs: Vec<TaskOutput>) -> Result<CrewOutput> {
    if outputs.is_empty() {
        return Err(CrewError::EmptyOutputs);
    }
    let ts = now();
    Ok(build_output(outputs, ts.clone(), ts, false))
}

fn build_output(outputs: Vec<TaskOutput>, started_at: String, finished_at: String, failed: bool) -> CrewOutput {
    let mut artifacts: Vec<ArtifactRecord> = Vec::new();
    for o in &outputs {
        for a in &o.artifacts {
            match artifacts.iter_mut().find(|r| r.path == a.path) {
                Some(r) => {
                    r.name = a.name.clone();
                    r.task_id = o.task_id.clone();
                }
                None => artifacts.push(ArtifactRecord {
                    name: a.name.clone(),
                    path: a.path.clone(),
                    task_id: o.task_id.clone(),
                }),
            }
        }
    }
    CrewOutput { task_outputs: outputs, artifacts, started_at, finished_at, failed }
}

pub struct Crew {
    spec: CrewSpec,
    catalog: ToolCatalog,
    memory: MemoryStore,
    run_log: Option<RunLog>,
    delegations: Vec<Delegation>,
    context_budget: usize,
}

impl Crew {
    /// Validates `spec` against `catalog`; the crew starts with an empty memory.
    pub fn build(spec: CrewSpec, catalog: ToolCatalog) -> Result<Crew> {
        spec.validate(&catalog)?;
        Ok(Crew {
            spec,
            catalog,
            memory: MemoryStore::default(),
            run_log: None,
            delegations: Vec::new(),
            context_budget: DEFAULT_CONTEXT_BUDGET,
        })
    }

    pub fn with_run_log(mut self, path: &Path) -> Result<Crew> {
        self.run_log = Some(RunLog::create(path)?);
        Ok(self)
    }

    pub fn with_memory(mut self, memory: MemoryStore) -> Crew {
        self.memory = memory;
        self
    }

    pub fn with_context_budget(mut self, budget: usize) -> Crew {
        self.context_budget = budget.max(1);
        self
    }

    pub fn spec(&self) -> &CrewSpec {
        &self.spec
    }

    pub fn memory(&self) -> &MemoryStore {
        &self.memory
    }

    pub fn delegations(&self) -> &[Delegation] {
        &self.delegations
    }

    fn render_task(task: &TaskSpec, inputs: &Inputs) -> Result<TaskSpec> {
        let missing = |name: String| CrewError::PlaceholderMissing { task: task.id.clone(), name };
        let mut t = task.clone();
        t.description = render_placeholders(&task.description, inputs).map_err(missing)?;
        t.expected_output = render_placeholders(&task.expected_output, inputs).map_err(missing)?;
        if let Some(h) = &task.tool_hint {
            t.tool_hint =
                Some(ToolHint { tool_id: h.tool_id.clone(), input: render_value(&h.input, inputs).map_err(missing)? });
        }
        Ok(t)
    }

    /// Runs every task in order. Placeholders are checked before anything
    /// executes; a task error aborts the run with the outputs so far.
    pub fn run(&mut self, gateway: &Gateway, inputs: &Inputs, env: &RunEnv) -> Result<CrewOutput> {
        let tasks: Vec<TaskSpec> =
            self.spec.tasks.iter().map(|t| Self::render_task(t, inputs)).collect::<Result<_>>()?;
        let started = now();
        let mut outputs: Vec<TaskOutput> = Vec::new();
        for task in &tasks {
            if let Some(l) = self.run_log.as_mut() {
                l.event(json!({"event": "task-start", "task_id": task.id, "assigned": task.assigned_agent}));
            }
            match self.run_task(gateway, task, env, &outputs) {
                Ok(out) => {
                    if !out.raw_text.trim().is_empty() {
                        self.memory.store(&out.agent_role, &task.id, RecordKind::TaskOutput, &out.raw_text, &[])?;
                    }
                    if let Some(l) = self.run_log.as_mut() {
                        l.event(json!({"event": "task-output", "task_id": task.id, "agent": out.agent_role,
                            "output_digest": digest(&out.raw_text), "tools": out.tool_trace.len()}));
                    }
                    outputs.push(out);
                }
                Err(e) => {
                    if let Some(l) = self.run_log.as_mut() {
                        l.event(json!({"event": "crew-failed", "task_id": task.id, "error": e.to_string()}));
                        l.flush();
                    }
                    let partial = build_output(outputs, started, now(), true);
                    return Err(CrewError::Aborted {
                        task_id: task.id.clone(),
                        source: Box::new(e),
                        partial: Box::new(partial),
                    });
                }
            }
        }
        if let Some(l) = self.run_log.as_mut() {
            l.event(json!({"event": "crew-finished", "tasks": outputs.len()}));
            l.flush();
        }
        Ok(build_output(outputs, started, now(), false))
    }

    fn run_task(
        &mut self,
        gateway: &Gateway,
        task: &TaskSpec,
        env: &RunEnv,
        completed: &[TaskOutput],
    ) -> Result<TaskOutput> {
        let context = self.memory.build_context(&task.context_task_ids, self.context_budget);
        let mut deps = TaskDeps {
            gateway,
            catalog: &self.catalog,
            memory: &mut self.memory,
            env,
            completed,
            log: self.run_log.as_mut(),
        };
        match self.spec.process {
            Process::Sequential => {
                let agent = match &task.assigned_agent {
                    Some(role) => self.spec.agent(role).expect("validated"),
                    None => &self.spec.agents[0],
                };
                execute_task(
                    agent,
                    &task.id,
                    &task.description,
                    &task.expected_output,
                    &context,
                    task.tool_hint.as_ref(),
                    &mut deps,
                )
            }
            Process::Hierarchical => {
                let manager = self.spec.manager.as_ref().expect("validated");
                let out = manage_task(manager, &self.spec.agents, task, &context, &mut deps)?;
                self.delegations.push(Delegation { task_id: task.id.clone(), coworker: out.agent_role.clone() });
                Ok(out)
            }
        }
    }
}

/// The manager's loop for one task: it must delegate exactly once (to the
/// assigned coworker when the task names one) and then answer.
fn manage_task(
    manager: &AgentSpec,
    agents: &[AgentSpec],
    task: &TaskSpec,
    context: &str,
    deps: &mut TaskDeps,
) -> Result<TaskOutput> {
    let coworkers: Vec<&str> = agents.iter().map(|a| a.role.as_str()).collect();
    let schemas = vec![delegate_schema(&coworkers)];
    if !context.trim().is_empty() {
        deps.memory.store(&manager.role, &task.id, RecordKind::Context, context, &[])?;
    }
    let mut messages = vec![
        Message::new(Role::System, system_prompt(manager, &schemas)),
        Message::new(
            Role::User,
            user_prompt(&task.description, &task.expected_output, context, task.assigned_agent.as_deref(), None),
        ),
    ];
    let mut delegated: Option<TaskOutput> = None;
    for _ in 0..manager.max_iterations {
        let request = ChatRequest { messages: messages.clone(), temperature: None, tool_schemas: schemas.clone() };
        let response = deps.gateway.complete(&request)?;
        let obs = match &response {
            ChatResponse::Final { text } => {
                let Some(out) = delegated else {
                    return Err(CrewError::NoDelegation { task: task.id.clone() });
                };
                return Ok(TaskOutput { raw_text: text.clone(), ..out });
            }
            ChatResponse::ToolCall { tool_id, tool_input } => {
                let coworker = tool_input.get("coworker").and_then(Value::as_str).unwrap_or("").trim();
                if !is_delegate_name(tool_id) {
                    format!("Error: tool '{tool_id}' is not available to you; use {DELEGATE_TOOL_ID}.")
                } else if delegated.is_some() {
                    "Error: this task has already been delegated; give your Final Answer.".to_string()
                } else if task.assigned_agent.as_deref().is_some_and(|a| !a.eq_ignore_ascii_case(coworker)) {
                    format!("Error: this task must be delegated to '{}'.", task.assigned_agent.as_deref().unwrap())
                } else {
                    match delegate(agents, task, tool_input, deps) {
                        Ok(out) => {
                            let text = out.raw_text.clone();
                            delegated = Some(out);
                            text
                        }
                        Err(CrewError::UnknownCoworker(name)) => {
                            format!("Error: no coworker named '{name}'. Coworkers: {}.", coworkers.join(", "))
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        };
        messages.push(Message::new(Role::Assistant, response.render()));
        messages.push(observation(&obs));
    }
    Err(CrewError::AgentLoopExceeded { role: manager.role.clone(), max_iterations: manager.max_iterations })
}

/// Validates `spec` and binds it to `catalog`.
pub fn build_crew(spec: CrewSpec, catalog: ToolCatalog) -> Result<Crew> {
    Crew::build(spec, catalog)
}

pub fn run_crew(crew: &mut Crew, gateway: &Gateway, inputs: &Inputs, env: &RunEnv) -> Result<CrewOutput> {
    crew.run(gateway, inputs, env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{FnBackend, ScriptedBackend};
    use crate::orchestration::{Tool, ToolError, ToolOutput};

    struct Echo;

    impl Tool for Echo {
        fn id(&self) -> &str {
            "echo"
        }
        fn name(&self) -> &str {
            "Echo text"
        }
        fn description(&self) -> &str {
            "Returns its input."
        }
        fn fields(&self) -> Vec<(&'static str, &'static str)> {
            vec![("text", "text to echo")]
        }
        fn call(&self, input: &Map<String, Value>, _: &ToolContext) -> std::result::Result<ToolOutput, ToolError> {
            let text = super::super::str_field(input, "text")?;
            if text == "boom" {
                return Err(ToolError::fatal("exploded"));
            }
            Ok(ToolOutput::text(format!("echo: {text}")).with_artifact("echo", "echo.txt"))
        }
    }

    fn catalog() -> ToolCatalog {
        let mut c = ToolCatalog::new();
        c.register(Echo);
        c
    }

    fn env() -> RunEnv {
        RunEnv::new(Path::new("."), 7)
    }

    fn worker(role: &str) -> AgentSpec {
        AgentSpec::new(role, "echo things", "A careful echoer.").with_tools(&["echo"])
    }

    fn hierarchical() -> CrewSpec {
        CrewSpec {
            name: "t".into(),
            agents: vec![worker("A"), worker("B")],
            tasks: vec![
                TaskSpec::new("t1", "say {word}", "the echo").assigned("A").hint("echo", json!({"text": "{word}"})),
                TaskSpec::new("t2", "say again", "the echo")
                    .assigned("B")
                    .after(&["t1"])
                    .hint("echo", json!({"text": "again"})),
            ],
            process: Process::Hierarchical,
            manager: Some(AgentSpec::new("M", "manage", "Runs the crew.").delegating()),
        }
    }

    fn inputs() -> Inputs {
        Inputs::from([("word".to_string(), "hello".to_string())])
    }

    #[test]
    fn hierarchical_run_delegates_each_task_once() {
        let gw = Gateway::new(Box::new(ScriptedBackend::new()));
        let mut crew = build_crew(hierarchical(), catalog()).unwrap();
        let out = run_crew(&mut crew, &gw, &inputs(), &env()).unwrap();
        assert!(!out.failed);
        assert_eq!(out.task_outputs.len(), 2);
        assert_eq!(out.task_outputs[0].agent_role, "A");
        assert_eq!(out.task_outputs[0].raw_text, "echo: hello");
        assert_eq!(out.task_outputs[1].agent_role, "B");
        assert_eq!(out.task_outputs[1].tool_trace.len(), 1);
        assert_eq!(out.artifacts.len(), 1);
        assert_eq!(out.artifacts[0].task_id, "t2");
        let d: Vec<_> = crew.delegations().iter().map(|d| (d.task_id.as_str(), d.coworker.as_str())).collect();
        assert_eq!(d, vec![("t1", "A"), ("t2", "B")]);
        // manager + worker tool + worker final + manager final per task
        assert_eq!(gw.calls(), 8);
        let ctx: Vec<_> = crew.memory().records().filter(|r| r.kind == RecordKind::Context).collect();
        assert!(ctx.iter().any(|r| r.task_id == "t2" && r.content.contains("echo: hello")));
    }

    #[test]
    fn deterministic_outputs() {
        let run = || {
            let gw = Gateway::new(Box::new(ScriptedBackend::new()));
            let mut crew = build_crew(hierarchical(), catalog()).unwrap();
            let out = run_crew(&mut crew, &gw, &inputs(), &env()).unwrap();
            serde_json::to_string(&(out.task_outputs, out.artifacts)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn missing_placeholder_fails_before_any_call() {
        let gw = Gateway::new(Box::new(ScriptedBackend::new()));
        let mut crew = build_crew(hierarchical(), catalog()).unwrap();
        let err = run_crew(&mut crew, &gw, &Inputs::new(), &env()).unwrap_err();
        assert!(matches!(err, CrewError::PlaceholderMissing { ref name, .. } if name == "word"));
        assert_eq!(gw.calls(), 0);
    }

    #[test]
    fn loop_cap_is_enforced() {
        let gw = Gateway::new(Box::new(FnBackend::new(|_| Ok(ChatResponse::tool_call("echo", json!({"text": "x"}))))));
        let mut a = worker("A");
        a.max_iterations = 3;
        let mut deps = TaskDeps {
            gateway: &gw,
            catalog: &catalog(),
            memory: &mut MemoryStore::default(),
            env: &env(),
            completed: &[],
            log: None,
        };
        let err = execute_task(&a, "t", "loop", "", "", None, &mut deps).unwrap_err();
        assert!(matches!(err, CrewError::AgentLoopExceeded { max_iterations: 3, .. }));
        assert_eq!(gw.calls(), 3);
    }

    #[test]
    fn immediate_answer_has_empty_trace() {
        let gw = Gateway::new(Box::new(FnBackend::new(|_| Ok(ChatResponse::final_text("done")))));
        let cat = catalog();
        let mut mem = MemoryStore::default();
        let e = env();
        let mut deps = TaskDeps { gateway: &gw, catalog: &cat, memory: &mut mem, env: &e, completed: &[], log: None };
        let out = execute_task(&worker("A"), "t", "x", "", "", None, &mut deps).unwrap();
        assert_eq!(out.raw_text, "done");
        assert!(out.tool_trace.is_empty());
    }

    #[test]
    fn unknown_tool_becomes_observation() {
        let gw = Gateway::new(Box::new(FnBackend::new(|r: &ChatRequest| {
            if r.messages.len() > 2 {
                Ok(ChatResponse::final_text(r.messages.last().unwrap().content.clone()))
            } else {
                Ok(ChatResponse::tool_call("web_search", json!({})))
            }
        })));
        let cat = catalog();
        let mut mem = MemoryStore::default();
        let e = env();
        let mut deps = TaskDeps { gateway: &gw, catalog: &cat, memory: &mut mem, env: &e, completed: &[], log: None };
        let out = execute_task(&worker("A"), "t", "x", "", "", None, &mut deps).unwrap();
        assert!(out.raw_text.contains("not available"), "{}", out.raw_text);
        assert_eq!(out.tool_trace[0].tool_id, "web_search");
    }

    #[test]
    fn ghost_coworker_is_reported_to_manager() {
        let gw = Gateway::new(Box::new(FnBackend::new(|r: &ChatRequest| {
            let last = r.messages.last().unwrap();
            if last.role == Role::Tool {
                Ok(ChatResponse::final_text(last.content.clone()))
            } else {
                Ok(ChatResponse::tool_call(DELEGATE_TOOL_ID, json!({"task": "x", "context": "", "coworker": "Ghost"})))
            }
        })));
        let mut spec = hierarchical();
        spec.tasks[0].assigned_agent = None;
        spec.tasks.truncate(1);
        let mut crew = build_crew(spec, catalog()).unwrap();
        let err = run_crew(&mut crew, &gw, &inputs(), &env()).unwrap_err();
        assert!(matches!(err.root(), CrewError::NoDelegation { .. }), "{err}");
        match err {
            CrewError::Aborted { partial, .. } => assert!(partial.failed && partial.task_outputs.is_empty()),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn wrong_coworker_is_refused() {
        let gw = Gateway::new(Box::new(FnBackend::new(|r: &ChatRequest| {
            let last = r.messages.last().unwrap();
            let tools = &r.tool_schemas;
            if last.role == Role::Tool {
                Ok(ChatResponse::final_text(last.content.clone()))
            } else if tools.iter().any(|t| t.id == DELEGATE_TOOL_ID) {
                Ok(ChatResponse::tool_call(DELEGATE_TOOL_ID, json!({"task": "x", "coworker": "B"})))
            } else {
                Ok(ChatResponse::final_text("worked"))
            }
        })));
        let mut spec = hierarchical();
        spec.tasks.truncate(1);
        let mut crew = build_crew(spec, catalog()).unwrap();
        let err = run_crew(&mut crew, &gw, &inputs(), &env()).unwrap_err();
        assert!(matches!(err.root(), CrewError::NoDelegation { .. }));
        assert!(crew.delegations().is_empty());
    }

    #[test]
    fn fatal_tool_error_aborts_with_partial_output() {
        let mut spec = hierarchical();
        spec.tasks[1].tool_hint = Some(ToolHint { tool_id: "echo".into(), input: json!({"text": "boom"}) });
        let gw = Gateway::new(Box::new(ScriptedBackend::new()));
        let mut crew = build_crew(spec, catalog()).unwrap();
        match run_crew(&mut crew, &gw, &inputs(), &env()).unwrap_err() {
            CrewError::Aborted { task_id, source, partial } => {
                assert_eq!(task_id, "t2");
                assert!(matches!(*source, CrewError::ToolFailed { .. }));
                assert!(partial.failed);
                assert_eq!(partial.task_outputs.len(), 1);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn sequential_runs_assigned_agents() {
        let mut spec = hierarchical();
        spec.process = Process::Sequential;
        spec.manager = None;
        let gw = Gateway::new(Box::new(ScriptedBackend::new()));
        let mut crew = build_crew(spec, catalog()).unwrap();
        let out = run_crew(&mut crew, &gw, &inputs(), &env()).unwrap();
        assert_eq!(out.task_outputs[1].agent_role, "B");
        assert_eq!(out.task_outputs[1].raw_text, "echo: again");
        assert_eq!(gw.calls(), 4);
    }

    #[test]
    fn validation_errors() {
        let mut s = hierarchical();
        s.manager = None;
        assert!(matches!(build_crew(s, catalog()), Err(CrewError::MissingManager)));
        let mut s = hierarchical();
        s.agents[1].role = "A".into();
        assert!(matches!(build_crew(s, catalog()), Err(CrewError::DuplicateRole(_))));
        let mut s = hierarchical();
        s.agents[0].tool_ids.push("web_search".into());
        assert!(matches!(build_crew(s, catalog()), Err(CrewError::UnknownTool { .. })));
        let mut s = hierarchical();
        s.tasks[0].context_task_ids = vec!["t2".into()];
        assert!(matches!(build_crew(s, catalog()), Err(CrewError::TaskCycle { .. })));
        let mut s = hierarchical();
        s.tasks.clear();
        assert!(matches!(build_crew(s, catalog()), Err(CrewError::EmptyCrew)));
        let mut s = hierarchical();
        s.tasks[0].assigned_agent = Some("Z".into());
        assert!(matches!(build_crew(s, catalog()), Err(CrewError::UnknownAgent { .. })));
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(matches!(aggregate(vec![]), Err(CrewError::EmptyOutputs)));
    }

    #[test]
    fn run_log_is_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = super::super::run_log_path(dir.path());
        let gw = Gateway::new(Box::new(ScriptedBackend::new()));
        let mut crew = build_crew(hierarchical(), catalog()).unwrap().with_run_log(&path).unwrap();
        run_crew(&mut crew, &gw, &inputs(), &env()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let events: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(events.last().unwrap()["event"], "crew-finished");
        assert_eq!(events.iter().filter(|e| e["event"] == "delegation").count(), 2);
    }
}
