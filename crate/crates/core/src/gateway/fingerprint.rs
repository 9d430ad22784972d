use std::sync::OnceLock;

use regex::Regex;
use sha2::{Digest, Sha256};

use super::ChatRequest;

fn timestamp_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?").unwrap())
}

/// Drops timestamps and collapses whitespace runs to one space.
pub fn normalize_text(text: &str) -> String {
    let no_ts = timestamp_re().replace_all(text, "<ts>");
    no_ts.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Hex SHA-256 over the normalized messages, temperature and tool ids.
pub fn fingerprint(request: &ChatRequest) -> String {
    let mut h = Sha256::new();
    for m in &request.messages {
        let role = serde_json::to_string(&m.role).expect("role serializes");
        h.update(role.as_bytes());
        h.update([0x1f]);
        h.update(normalize_text(&m.content).as_bytes());
        h.update([0x1e]);
    }
    match request.temperature {
        Some(t) => h.update(format!("temperature={t:.4}").as_bytes()),
        None => h.update(b"temperature=none"),
    }
    h.update([0x1e]);
    let ids: Vec<&str> = request.tool_schemas.iter().map(|t| t.id.as_str()).collect();
    h.update(format!("tools={}", ids.join(",")).as_bytes());
    hex::encode(h.finalize())
}
