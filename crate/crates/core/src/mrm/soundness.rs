use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{load_table, MrmError, Result};
use crate::model_lab::{feature_importance, load_model, ImportanceMethod, ImportanceReport, MetricsReport, ModelError};
use crate::modeling::evaluate_table;

pub const TOP_FEATURES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub metric: String,
    pub minimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoundnessVerdict {
    Sound,
    Concerns,
}

impl SoundnessVerdict {
    pub fn id(self) -> &'static str {
        match self {
            SoundnessVerdict::Sound => "sound",
            SoundnessVerdict::Concerns => "concerns",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub importance: ImportanceReport,
    pub top_features: Vec<(String, f64)>,
    pub metrics: MetricsReport,
    pub checklist: Vec<CheckItem>,
    pub narrative: String,
    pub verdict: SoundnessVerdict,
}

fn benchmark_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?im)^\s*[-*]?\s*minimum\s+([a-z0-9 _-]+?)\s*:\s*([0-9]*\.?[0-9]+)").unwrap())
}

fn metric_key(name: &str) -> Option<&'static str> {
    match name.trim().to_lowercase().replace(['-', '_'], " ").as_str() {
        "accuracy" => Some("accuracy"),
        "precision" => Some("precision"),
        "recall" => Some("recall"),
        "f1" | "f1 score" => Some("f1"),
        "auc" | "roc auc" => Some("auc"),
        _ => None,
    }
}

/// Lines like `Minimum accuracy: 0.70`; unknown metric names are skipped.
pub fn parse_benchmarks(guide: &str) -> Vec<Benchmark> {
    benchmark_re()
        .captures_iter(guide)
        .filter_map(|c| {
            let metric = metric_key(&c[1])?;
            Some(Benchmark { metric: metric.to_string(), minimum: c[2].parse().ok()? })
        })
        .collect()
}

fn metric_value(m: &MetricsReport, key: &str) -> Option<f64> {
    match key {
        "accuracy" => Some(m.accuracy),
        "precision" => Some(m.precision),
        "recall" => Some(m.recall),
        "f1" => Some(m.f1),
        "auc" => m.auc,
        _ => None,
    }
}

/// Importance, benchmark, plausibility and method checks of a saved model.
pub fn assess_soundness(
    model_path: &Path,
    test2: &Path,
    target: &str,
    guide: &str,
    plausible: &[String],
    method: Option<ImportanceMethod>,
    seed: u64,
) -> Result<SoundnessReport> {
    let est = load_model(model_path).map_err(|e| match e {
        ModelError::FileMissing(p) => MrmError::FileMissing(p),
        ModelError::CorruptArtifact(m) => MrmError::CorruptArtifact(m),
        other => MrmError::CorruptArtifact(other.to_string()),
    })?;
    if est.n_features() == 0 {
        return Err(MrmError::CorruptArtifact("model has no features".into()));
    }
    let test = load_table(test2)?;
    let metrics = evaluate_table(&est, &test, target).map_err(|e| MrmError::Evaluation(e.to_string()))?;
    let (_, x, y) = test.features_and_labels(target)?;
    let y: Vec<f64> = y.into_iter().map(f64::from).collect();
    let importance = feature_importance(&est, method, &x, &y, seed)?;
    let top = importance.top_k(TOP_FEATURES);
    let mut checklist = Vec::new();

    let benchmarks = parse_benchmarks(guide);
    let misses: Vec<String> = benchmarks
        .iter()
        .filter_map(|b| {
            let v = metric_value(&metrics, &b.metric)?;
            (v < b.minimum).then(|| format!("{} {v:.4} < {}", b.metric, b.minimum))
        })
        .collect();
    checklist.push(CheckItem {
        name: "performance-benchmarks".into(),
        passed: misses.is_empty(),
        detail: if benchmarks.is_empty() {
            "the guide sets no minimum benchmarks".into()
        } else if misses.is_empty() {
            let met: Vec<String> = benchmarks.iter().map(|b| format!("{} >= {}", b.metric, b.minimum)).collect();
            format!("all benchmarks met ({})", met.join(", "))
        } else {
            format!("benchmarks missed: {}", misses.join(", "))
        },
    });

    let overlap: Vec<&str> = top.iter().map(|(n, _)| n.as_str()).filter(|n| plausible.iter().any(|p| p == n)).collect();
    checklist.push(CheckItem {
        name: "plausible-drivers".into(),
        passed: plausible.is_empty() || !overlap.is_empty(),
        detail: if plausible.is_empty() {
            "no plausibility set declared".into()
        } else if overlap.is_empty() {
            format!("none of the expected drivers ({}) is in the top {TOP_FEATURES}", plausible.join(", "))
        } else {
            format!("expected drivers in the top {TOP_FEATURES}: {}", overlap.join(", "))
        },
    });

    let suits = importance.method.suits(est.family);
    checklist.push(CheckItem {
        name: "importance-method".into(),
        passed: suits,
        detail: format!(
            "{} importance {} for {}",
            importance.method,
            if suits { "is appropriate" } else { "is not appropriate" },
            est.family.label()
        ),
    });

    let verdict = if checklist.iter().all(|c| c.passed) { SoundnessVerdict::Sound } else { SoundnessVerdict::Concerns };
    let leaders: Vec<&str> = top.iter().take(3).map(|(n, _)| n.as_str()).collect();
    let narrative = format!(
        "The {} model is driven mainly by {} ({} importance). {} of {} checklist items pass.",
        est.family.label(),
        leaders.join(", "),
        importance.method,
        checklist.iter().filter(|c| c.passed).count(),
        checklist.len()
    );
    Ok(SoundnessReport { importance, top_features: top, metrics, checklist, narrative, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmarks_parse() {
        let g = "intro\nMinimum accuracy: 0.70\n- minimum F1-score: .5\nMinimum latency: 3\nminimum AUC:0.6";
        let b = parse_benchmarks(g);
        let got: Vec<(&str, f64)> = b.iter().map(|b| (b.metric.as_str(), b.minimum)).collect();
        assert_eq!(got, vec![("accuracy", 0.70), ("f1", 0.5), ("auc", 0.6)]);
    }
}
