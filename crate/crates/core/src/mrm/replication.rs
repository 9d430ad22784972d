use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{load_table, MrmError, Result};
use crate::model_lab::{self, Family, Hyperparams, MetricsReport};
use crate::modeling::evaluate_table;

/// Same code, data and seed must reproduce metrics to rounding noise.
pub const SAME_ENGINE_TOLERANCE: f64 = 1e-9;
/// Allowed gap when the reference came from a different ML stack.
pub const CROSS_ENGINE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplicationVerdict {
    Replicated,
    Discrepancy,
}

impl ReplicationVerdict {
    pub fn id(self) -> &'static str {
        match self {
            ReplicationVerdict::Replicated => "replicated",
            ReplicationVerdict::Discrepancy => "discrepancy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub family: Family,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub reference: BTreeMap<String, f64>,
    pub replicated: BTreeMap<String, f64>,
    pub deltas: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub verdict: ReplicationVerdict,
}

fn named(m: &MetricsReport) -> BTreeMap<String, f64> {
    m.named().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Refits `family` with `hyperparams` and `seed` on `train2`, evaluates on
/// `test2`, and compares every reference metric. A metric present on only
/// one side counts as an infinite delta.
#[allow(clippy::too_many_arguments)]
pub fn replicate_model(
    train2: &Path,
    test2: &Path,
    target: &str,
    family: Family,
    hyperparams: &Hyperparams,
    reference: &MetricsReport,
    seed: u64,
    tolerance: f64,
) -> Result<ReplicationReport> {
    let train = load_table(train2)?;
    let test = load_table(test2)?;
    let (names, x, y) = train.features_and_labels(target)?;
    let y: Vec<f64> = y.into_iter().map(f64::from).collect();
    let est = model_lab::fit(family, hyperparams, &names, &x, &y, seed)?;
    let metrics = evaluate_table(&est, &test, target).map_err(|e| MrmError::Evaluation(e.to_string()))?;
    let reference = named(reference);
    let replicated = named(&metrics);
    let mut deltas = BTreeMap::new();
    for key in reference.keys().chain(replicated.keys()) {
        let d = match (reference.get(key), replicated.get(key)) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        };
        deltas.insert(key.clone(), d);
    }
    let verdict = if deltas.values().all(|d| *d <= tolerance) {
        ReplicationVerdict::Replicated
    } else {
        ReplicationVerdict::Discrepancy
    };
    Ok(ReplicationReport {
        family,
        hyperparams: est.hyperparams,
        seed,
        reference,
        replicated,
        deltas,
        tolerance,
        verdict,
    })
}
