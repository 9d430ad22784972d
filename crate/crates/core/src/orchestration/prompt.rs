use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

use super::{AgentSpec, Inputs, ToolHint};
use crate::gateway::{sections, ToolSchema};

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap())
}

/// Replaces `{name}` with `inputs[name]`; returns the first missing name.
pub fn render_placeholders(text: &str, inputs: &Inputs) -> Result<String, String> {
    let re = placeholder_re();
    if let Some(missing) = re.captures_iter(text).map(|c| c[1].to_string()).find(|n| !inputs.contains_key(n)) {
        return Err(missing);
    }
    Ok(re.replace_all(text, |c: &regex::Captures| inputs[&c[1]].clone()).into_owned())
}

/// Renders placeholders in every string of a JSON value.
pub fn render_value(value: &Value, inputs: &Inputs) -> Result<Value, String> {
    Ok(match value {
        Value::String(s) => Value::String(render_placeholders(s, inputs)?),
        Value::Array(items) => Value::Array(items.iter().map(|v| render_value(v, inputs)).collect::<Result<_, _>>()?),
        Value::Object(m) => {
            let mut out = serde_json::Map::new();
            for (k, v) in m {
                out.insert(k.clone(), render_value(v, inputs)?);
            }
            Value::Object(out)
        }
        other => other.clone(),
    })
}

pub fn system_prompt(agent: &AgentSpec, tools: &[ToolSchema]) -> String {
    let mut s = format!("You are {}.\n{}\nYour personal goal is: {}\n\n", agent.role, agent.backstory, agent.goal);
    if tools.is_empty() {
        s.push_str("You have no tools. Reply with:\nFinal Answer: <your complete answer>\n");
        return s;
    }
    s.push_str("You can use these tools:\n");
    for t in tools {
        let fields: Vec<String> = t.fields.iter().map(|(f, d)| format!("{f} ({d})")).collect();
        s.push_str(&format!("- {} ({}): {} Input fields: {}.\n", t.id, t.name, t.description, fields.join(", ")));
    }
    s.push_str(
        "\nTo use a tool, reply exactly:\nAction: <tool id>\nAction Input: <JSON object>\n\n\
         When you have the final result, reply:\nFinal Answer: <your complete answer>\n",
    );
    s
}

pub fn user_prompt(
    task: &str,
    expected_output: &str,
    context: &str,
    coworker: Option<&str>,
    hint: Option<&ToolHint>,
) -> String {
    let mut s = format!("{}\n{}\n\n{}\n{}\n", sections::TASK, task.trim(), sections::EXPECTED, expected_output.trim());
    if !context.trim().is_empty() {
        s.push_str(&format!("\n{}\n{}\n", sections::CONTEXT, context.trim()));
    }
    if let Some(c) = coworker {
        s.push_str(&format!("\n{}\n{}\n", sections::COWORKER, c));
    }
    if let Some(h) = hint {
        s.push_str(&format!(
            "\n{}\nAction: {}\nAction Input: {}\n",
            sections::SUGGESTED,
            h.tool_id,
            serde_json::to_string(&h.input).expect("value serializes")
        ));
    }
    s
}
