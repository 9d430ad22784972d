use std::fs;
use std::path::Path;

use serde_json::Value;

use super::{Estimator, ModelError, Result};

pub const ARTIFACT_FORMAT: &str = "crewlab-model";
pub const ARTIFACT_VERSION: u32 = 1;

/// Writes `{"format", "version", "estimator"}` as pretty JSON. Floats use
/// shortest round-trip formatting, so a reload predicts bit-identically.
pub fn save_model(est: &Estimator, path: &Path) -> Result<()> {
    let doc = serde_json::json!({
        "format": ARTIFACT_FORMAT,
        "version": ARTIFACT_VERSION,
        "estimator": est,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| ModelError::CorruptArtifact(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Estimator> {
    if !path.exists() {
        return Err(ModelError::FileMissing(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| ModelError::CorruptArtifact(e.to_string()))?;
    if doc.get("format").and_then(Value::as_str) != Some(ARTIFACT_FORMAT) {
        return Err(ModelError::CorruptArtifact("missing or unknown format tag".into()));
    }
    let version = doc
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| ModelError::CorruptArtifact("missing version".into()))?;
    if version != u64::from(ARTIFACT_VERSION) {
        return Err(ModelError::VersionMismatch { found: version as u32, expected: ARTIFACT_VERSION });
    }
    let est: Estimator =
        serde_json::from_value(doc["estimator"].clone()).map_err(|e| ModelError::CorruptArtifact(e.to_string()))?;
    if est.feature_names.is_empty() {
        return Err(ModelError::CorruptArtifact("model has no features".into()));
    }
    Ok(est)
}
