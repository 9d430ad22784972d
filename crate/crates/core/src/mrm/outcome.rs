use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{load_table, MrmError, Result};
use crate::model_lab::{load_model, MetricsReport};
use crate::modeling::evaluate_table;
use crate::seed;
use crate::tabular::{infer_schema, Column, ColumnKind, NumericStats, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbMode {
    /// x + c·σ
    AddFixed,
    /// x + ε, ε ~ N(0, (c·σ)²)
    AddRandom,
    /// x·(1 + c)
    MultiplyFixed,
}

impl PerturbMode {
    pub fn id(self) -> &'static str {
        match self {
            PerturbMode::AddFixed => "add-fixed",
            PerturbMode::AddRandom => "add-random",
            PerturbMode::MultiplyFixed => "multiply-fixed",
        }
    }

    pub fn parse(s: &str) -> Option<PerturbMode> {
        match s.trim().to_lowercase().replace('_', "-").as_str() {
            "add-fixed" => Some(PerturbMode::AddFixed),
            "add-random" => Some(PerturbMode::AddRandom),
            "multiply-fixed" => Some(PerturbMode::MultiplyFixed),
            _ => None,
        }
    }
}

/// Numeric feature columns of `table`: not the target, not label-encoded,
/// and numeric (not a low-cardinality flag) in the raw `reference` table.
/// Columns absent from the reference are judged on `table` itself.
pub fn numeric_feature_columns(
    table: &Table,
    reference: Option<&Table>,
    target: &str,
    encoded: &[String],
) -> Result<Vec<String>> {
    let own = infer_schema(table, target)?;
    let raw = match reference {
        Some(r) => infer_schema(r, target).ok(),
        None => None,
    };
    let kind_of = |name: &str| {
        raw.as_ref()
            .and_then(|s| s.iter().find(|c| c.name == name))
            .or_else(|| own.iter().find(|c| c.name == name))
            .map(|c| c.kind)
    };
    Ok(table
        .column_names()
        .iter()
        .filter(|n| *n != target && !encoded.contains(n))
        .filter(|n| kind_of(n) == Some(ColumnKind::Numeric))
        .cloned()
        .collect())
}

fn replace_numeric(table: &Table, name: &str, values: Vec<f64>) -> Result<Table> {
    Ok(table.with_column(name, Column::Numeric(values))?)
}

/// Shifts the listed numeric columns; every other column is left untouched.
pub fn perturb_shifted(table: &Table, numeric: &[String], mode: PerturbMode, c: f64, seed: u64) -> Result<Table> {
    if numeric.is_empty() {
        return Err(MrmError::NoNumericColumns);
    }
    let mut rng = seed::stream(seed, seed::PERTURB);
    let mut out = table.clone();
    for name in numeric {
        let col = table.numeric(name)?;
        let present: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        let sd = NumericStats::compute(&present).map(|s| s.std).filter(|s| s.is_finite()).unwrap_or(0.0);
        let values = col
            .iter()
            .map(|&x| match mode {
                PerturbMode::AddFixed => x + c * sd,
                PerturbMode::AddRandom => x + c * sd * rng.sample::<f64, _>(StandardNormal),
                PerturbMode::MultiplyFixed => x * (1.0 + c),
            })
            .collect();
        out = replace_numeric(&out, name, values)?;
    }
    Ok(out)
}

/// Adds `magnitude` to every listed numeric cell of the given rows.
pub fn perturb_outliers(table: &Table, numeric: &[String], rows: &[usize], magnitude: f64) -> Result<Table> {
    if let Some(&row) = rows.iter().find(|&&r| r >= table.n_rows()) {
        return Err(MrmError::RowOutOfRange { row, n_rows: table.n_rows() });
    }
    let mut out = table.clone();
    for name in numeric {
        let mut values = table.numeric(name)?.to_vec();
        for &r in rows {
            values[r] += magnitude;
        }
        out = replace_numeric(&out, name, values)?;
    }
    Ok(out)
}

/// The four metrics of the outcome result object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMetrics {
    pub accuracy: f64,
    #[serde(rename = "F1_score")]
    pub f1_score: f64,
    pub precision: f64,
    /// AUC of the hard predictions.
    #[serde(rename = "ROC_AUC")]
    pub roc_auc: f64,
}

impl OutcomeMetrics {
    pub fn from_report(m: &MetricsReport) -> Result<Self> {
        let roc_auc = m.auc_label.ok_or_else(|| MrmError::Evaluation("test data has a single class".into()))?;
        Ok(OutcomeMetrics { accuracy: m.accuracy, f1_score: m.f1, precision: m.precision, roc_auc })
    }

    pub fn named(&self) -> [(&'static str, f64); 4] {
        [
            ("accuracy", self.accuracy),
            ("F1_score", self.f1_score),
            ("precision", self.precision),
            ("ROC_AUC", self.roc_auc),
        ]
    }

    /// `other - self` per metric.
    pub fn delta_to(&self, other: &OutcomeMetrics) -> BTreeMap<String, f64> {
        self.named().iter().zip(other.named()).map(|((k, a), (_, b))| (k.to_string(), b - a)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeConfig {
    pub mode: PerturbMode,
    pub magnitude: f64,
    pub outlier_rows: Vec<usize>,
    pub outlier_magnitude: f64,
    /// Drops larger than this are reported as sensitivity.
    pub sensitivity_threshold: f64,
}

impl Default for OutcomeConfig {
    fn default() -> Self {
        Self {
            mode: PerturbMode::AddRandom,
            magnitude: 1.0,
            outlier_rows: vec![0],
            outlier_magnitude: 1000.0,
            sensitivity_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub config: OutcomeConfig,
    pub perturbed_columns: Vec<String>,
    pub n_test: usize,
    pub baseline: OutcomeMetrics,
    pub shifted_inputs: OutcomeMetrics,
    pub adversarial_outlier_inputs: OutcomeMetrics,
    pub shifted_delta: BTreeMap<String, f64>,
    pub outlier_delta: BTreeMap<String, f64>,
    /// Metric drops above the sensitivity threshold.
    pub sensitivities: Vec<String>,
    pub narrative: String,
}

pub fn analyze_outcomes(
    model_path: &Path,
    test2: &Path,
    target: &str,
    numeric: &[String],
    config: &OutcomeConfig,
    seed: u64,
) -> Result<OutcomeReport> {
    let est = load_model(model_path)?;
    let test = load_table(test2)?;
    let eval = |t: &Table| -> Result<OutcomeMetrics> {
        let m = evaluate_table(&est, t, target).map_err(|e| MrmError::Evaluation(e.to_string()))?;
        OutcomeMetrics::from_report(&m)
    };
    let baseline = eval(&test)?;
    let shifted = eval(&perturb_shifted(&test, numeric, config.mode, config.magnitude, seed)?)?;
    let outlier = eval(&perturb_outliers(&test, numeric, &config.outlier_rows, config.outlier_magnitude)?)?;
    let shifted_delta = baseline.delta_to(&shifted);
    let outlier_delta = baseline.delta_to(&outlier);
    let mut sensitivities = Vec::new();
    for (label, deltas) in [("shifted", &shifted_delta), ("outlier", &outlier_delta)] {
        for (k, d) in deltas {
            if -d > config.sensitivity_threshold {
                sensitivities.push(format!("{label} {k} dropped by {:.4}", -d));
            }
        }
    }
    let narrative = format!(
        "Baseline accuracy {:.4}. Under {} shifts (c = {}) accuracy is {:.4}; with {} outlier row(s) \
         (+{}) it is {:.4}. {}",
        baseline.accuracy,
        config.mode.id(),
        config.magnitude,
        shifted.accuracy,
        config.outlier_rows.len(),
        config.outlier_magnitude,
        outlier.accuracy,
        if sensitivities.is_empty() {
            "No metric dropped by more than the sensitivity threshold.".to_string()
        } else {
            format!("Sensitive to: {}.", sensitivities.join("; "))
        }
    );
    Ok(OutcomeReport {
        config: config.clone(),
        perturbed_columns: numeric.to_vec(),
        n_test: test.n_rows(),
        baseline,
        shifted_inputs: shifted,
        adversarial_outlier_inputs: outlier,
        shifted_delta,
        outlier_delta,
        sensitivities,
        narrative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Value;

    fn table() -> Table {
        let rows: Vec<Vec<Value>> = (0..6)
            .map(|i| {
                vec![
                    Value::Num(i as f64 * 2.0),
                    Value::Text(if i % 2 == 0 { "a".into() } else { "b".into() }),
                    Value::Num(f64::from(i % 2)),
                ]
            })
            .collect();
        Table::from_rows(vec!["x".into(), "cat".into(), "y".into()], &rows).unwrap()
    }

    #[test]
    fn add_fixed_shifts_by_sigma() {
        let t = table();
        let sd = NumericStats::compute(t.numeric("x").unwrap()).unwrap().std;
        let p = perturb_shifted(&t, &["x".into()], PerturbMode::AddFixed, 1.0, 3).unwrap();
        for (a, b) in t.numeric("x").unwrap().iter().zip(p.numeric("x").unwrap()) {
            assert_eq!(*b, a + sd);
        }
        assert_eq!(p.column("cat"), t.column("cat"));
        assert_eq!(p.column("y"), t.column("y"));
        assert_eq!(perturb_shifted(&t, &["x".into()], PerturbMode::AddFixed, 0.0, 3).unwrap(), t);
        assert!(matches!(perturb_shifted(&t, &[], PerturbMode::AddRandom, 1.0, 3), Err(MrmError::NoNumericColumns)));
    }

    #[test]
    fn add_random_is_seeded() {
        let t = table();
        let a = perturb_shifted(&t, &["x".into()], PerturbMode::AddRandom, 1.0, 3).unwrap();
        let b = perturb_shifted(&t, &["x".into()], PerturbMode::AddRandom, 1.0, 3).unwrap();
        let c = perturb_shifted(&t, &["x".into()], PerturbMode::AddRandom, 1.0, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let m = perturb_shifted(&t, &["x".into()], PerturbMode::MultiplyFixed, 0.5, 3).unwrap();
        assert_eq!(m.numeric("x").unwrap()[2], 6.0);
    }

    #[test]
    fn outliers_touch_listed_rows_only() {
        let t = table();
        let p = perturb_outliers(&t, &["x".into()], &[0], 1000.0).unwrap();
        assert_eq!(p.numeric("x").unwrap()[0], 1000.0);
        assert_eq!(&p.numeric("x").unwrap()[1..], &t.numeric("x").unwrap()[1..]);
        assert_eq!(perturb_outliers(&t, &["x".into()], &[], 1000.0).unwrap(), t);
        assert!(matches!(
            perturb_outliers(&t, &["x".into()], &[6], 1.0),
            Err(MrmError::RowOutOfRange { row: 6, n_rows: 6 })
        ));
    }

    #[test]
    fn encoded_and_flag_columns_are_not_numeric_features() {
        let rows: Vec<Vec<Value>> = (0..20)
            .map(|i| vec![Value::Num(i as f64 * 0.5 + 0.1), Value::Num(f64::from(i % 3)), Value::Num(f64::from(i % 2))])
            .collect();
        let t = Table::from_rows(vec!["x".into(), "flag".into(), "y".into()], &rows).unwrap();
        assert_eq!(numeric_feature_columns(&t, None, "y", &[]).unwrap(), vec!["x".to_string()]);
        assert!(numeric_feature_columns(&t, None, "y", &["x".into()]).unwrap().is_empty());
    }
}
