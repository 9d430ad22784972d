use std::sync::OnceLock;

use regex::Regex;
use serde_json::{Map, Value};

use super::{ChatResponse, GatewayError, Result};

struct Patterns {
    action: Regex,
    input: Regex,
    observation: Regex,
    py_literals: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        action: Regex::new(r"(?i)^[\s*`_#>-]*action[\s*`_]*:[\s*`_]*(.*)$").unwrap(),
        input: Regex::new(r"(?i)^[\s*`_#>-]*action[\s_]*input[\s*`_]*:[\s*`_]*(.*)$").unwrap(),
        observation: Regex::new(r"(?i)^[\s*`_#>-]*observation[\s*`_]*:").unwrap(),
        py_literals: Regex::new(r"\b(True|False|None)\b").unwrap(),
    })
}

fn clean_name(s: &str) -> String {
    s.trim().trim_matches(|c: char| matches!(c, '*' | '`' | '"' | '\'' | '_') || c.is_whitespace()).to_string()
}

fn parse_object(raw: &str) -> Option<Map<String, Value>> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    if end < start {
        return None;
    }
    let body = &raw[start..=end];
    let strict = serde_json::from_str::<Value>(body).ok();
    let value = strict.or_else(|| {
        // python dict literal: {'a': True}
        let swapped = body.replace('\'', "\"");
        let fixed = patterns().py_literals.replace_all(&swapped, |c: &regex::Captures| match &c[1] {
            "True" => "true",
            "False" => "false",
            _ => "null",
        });
        serde_json::from_str::<Value>(&fixed).ok()
    })?;
    match value {
        Value::Object(m) => Some(m),
        _ => None,
    }
}

/// Parses free-form "Action:" / "Action Input:" text. Text without an
/// Action header is a final answer (anything before "Final Answer:" is
/// dropped).
pub fn parse_action(text: &str) -> Result<ChatResponse> {
    if text.trim().is_empty() {
        return Err(GatewayError::MalformedResponse("empty response".into()));
    }
    let p = patterns();
    let lines: Vec<&str> = text.lines().collect();
    let Some(ai) = lines.iter().position(|l| p.action.is_match(l) && !p.input.is_match(l)) else {
        let lower = text.to_ascii_lowercase();
        let body = match lower.rfind("final answer:") {
            Some(i) => &text[i + "final answer:".len()..],
            None => text,
        };
        let body = body.trim();
        if body.is_empty() {
            return Err(GatewayError::MalformedResponse("empty final answer".into()));
        }
        return Ok(ChatResponse::final_text(body));
    };
    let mut name = clean_name(&p.action.captures(lines[ai]).unwrap()[1]);
    let mut next = ai + 1;
    if name.is_empty() {
        while next < lines.len() && lines[next].trim().is_empty() {
            next += 1;
        }
        if next < lines.len() && !p.input.is_match(lines[next]) {
            name = clean_name(lines[next]);
            next += 1;
        }
    }
    if name.is_empty() {
        return Err(GatewayError::MalformedResponse("Action header without a tool name".into()));
    }
    let Some(ii) = (next..lines.len()).find(|&i| p.input.is_match(lines[i])) else {
        return Err(GatewayError::MalformedResponse(format!("Action '{name}' has no Action Input")));
    };
    let mut raw = p.input.captures(lines[ii]).unwrap()[1].to_string();
    for line in &lines[ii + 1..] {
        if p.observation.is_match(line) || p.action.is_match(line) && !p.input.is_match(line) {
            break;
        }
        if line.trim_start().starts_with("```") {
            continue;
        }
        raw.push('\n');
        raw.push_str(line);
    }
    let input = parse_object(&raw)
        .ok_or_else(|| GatewayError::MalformedResponse(format!("Action '{name}' input is not a parsable object")))?;
    Ok(ChatResponse::ToolCall { tool_id: name, tool_input: input })
}

/// Accepts the structured envelope `{"tool": id, "tool_input": {...}}` or
/// `{"final_answer": text}`, falling back to [`parse_action`].
pub fn parse_response(text: &str) -> Result<ChatResponse> {
    let body: String = text.lines().filter(|l| !l.trim_start().starts_with("```")).collect::<Vec<_>>().join("\n");
    let trimmed = body.trim();
    if trimmed.starts_with('{') {
        if let Ok(Value::Object(m)) = serde_json::from_str::<Value>(trimmed) {
            let tool = m.get("tool").or_else(|| m.get("tool_id")).and_then(Value::as_str);
            let input = m.get("tool_input").or_else(|| m.get("input"));
            if let (Some(tool), Some(Value::Object(input))) = (tool, input) {
                return Ok(ChatResponse::ToolCall { tool_id: tool.to_string(), tool_input: input.clone() });
            }
            if let Some(text) = m.get("final_answer").or_else(|| m.get("final")).and_then(Value::as_str) {
                return Ok(ChatResponse::final_text(text));
            }
        }
    }
    parse_action(text)
}

/// Body of a `### Heading` section: the lines after the heading up to the
/// next `### ` line, trimmed.
pub fn section(text: &str, heading: &str) -> Option<String> {
    let mut lines = text.lines();
    lines.by_ref().find(|l| l.trim() == heading)?;
    let body: Vec<&str> = lines.take_while(|l| !l.starts_with("### ")).collect();
    Some(body.join("\n").trim().to_string())
}
