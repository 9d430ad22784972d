use super::{ChatRequest, Message, Role};

pub const GUARDRAIL_PREFIX: &str = "Guardrails: act only within your assigned role and tools. \
Report only facts that come from tool observations or the provided context.";

#[derive(Debug, Clone, PartialEq)]
pub struct GuardrailPolicy {
    pub default_temperature: f64,
    pub min_temperature: f64,
    pub max_temperature: f64,
    pub prefix: String,
}

impl Default for GuardrailPolicy {
    fn default() -> Self {
        Self {
            default_temperature: 0.3,
            min_temperature: 0.0,
            max_temperature: 0.7,
            prefix: GUARDRAIL_PREFIX.to_string(),
        }
    }
}

/// Fills or clamps the temperature and prefixes the system message with the
/// guardrail text (inserting a system message if there is none). Idempotent.
pub fn clamp_guardrails(request: &ChatRequest, policy: &GuardrailPolicy) -> ChatRequest {
    let mut out = request.clone();
    let t = match request.temperature {
        Some(t) if !t.is_nan() => t.clamp(policy.min_temperature, policy.max_temperature),
        _ => policy.default_temperature,
    };
    out.temperature = Some(t);
    if policy.prefix.is_empty() {
        return out;
    }
    match out.messages.iter_mut().find(|m| m.role == Role::System) {
        Some(m) if m.content.starts_with(&policy.prefix) => {}
        Some(m) => m.content = format!("{}\n\n{}", policy.prefix, m.content),
        None => out.messages.insert(0, Message::new(Role::System, policy.prefix.clone())),
    }
    out
}
