use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{format_number, Column, Result, Table, TabularError};

/// Integer-valued columns with at most this many distinct values are treated
/// as categorical-like flags (kept out of numeric perturbation).
pub const FLAG_MAX_CARDINALITY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    BinaryFlag,
    Target,
}

impl ColumnKind {
    /// Categorical and flag columns hold fixed symbolic values.
    pub fn is_categorical_like(self) -> bool {
        matches!(self, ColumnKind::Categorical | ColumnKind::BinaryFlag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Fisher–Pearson coefficient `m3 / m2^1.5`; 0 for constant columns.
    pub skewness: f64,
}

impl NumericStats {
    /// Statistics over the non-missing values; `None` if all are missing.
    pub fn compute(values: &[f64]) -> Option<Self> {
        let xs: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3) = (0.0, 0.0);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in &xs {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            min = min.min(x);
            max = max.max(x);
        }
        let std = if xs.len() > 1 { (m2 / (n - 1.0)).sqrt() } else { 0.0 };
        m2 /= n;
        m3 /= n;
        // rounding noise in the mean of a constant column is not spread
        let noise = 1e-14 * mean.abs().max(1.0);
        let skewness = if m2 <= noise * noise { 0.0 } else { m3 / m2.powf(1.5) };
        Some(Self { mean, std, min, max, skewness })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub stats: Option<NumericStats>,
    pub missing_fraction: f64,
    pub cardinality: usize,
}

/// Classifies every column: text → categorical; integer-valued numeric with
/// at most [`FLAG_MAX_CARDINALITY`] levels → binary-flag; other numeric →
/// numeric with descriptive statistics. Exactly one column is the target.
pub fn infer_schema(table: &Table, target: &str) -> Result<Vec<ColumnSchema>> {
    if table.column_index(target).is_none() {
        return Err(TabularError::UnknownTarget(target.to_string()));
    }
    let n = table.n_rows();
    let mut out = Vec::with_capacity(table.n_cols());
    for (name, col) in table.column_names().iter().zip(table.columns()) {
        let missing_fraction = if n == 0 { 0.0 } else { col.missing_count() as f64 / n as f64 };
        let (cardinality, integral) = match col {
            Column::Numeric(v) => {
                let distinct: HashSet<String> = v.iter().filter(|x| !x.is_nan()).map(|x| format_number(*x)).collect();
                let integral = v.iter().filter(|x| !x.is_nan()).all(|x| x.fract() == 0.0);
                (distinct.len(), integral)
            }
            Column::Text(v) => (v.iter().flatten().collect::<HashSet<_>>().len(), false),
        };
        let (kind, stats) = match col {
            _ if name == target => (ColumnKind::Target, None),
            Column::Text(_) => (ColumnKind::Categorical, None),
            Column::Numeric(_) if integral && cardinality <= FLAG_MAX_CARDINALITY => (ColumnKind::BinaryFlag, None),
            Column::Numeric(v) => (ColumnKind::Numeric, NumericStats::compute(v)),
        };
        out.push(ColumnSchema { name: name.clone(), kind, stats, missing_fraction, cardinality });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{toy, Value};

    fn n(v: f64) -> Value {
        Value::Num(v)
    }

    #[test]
    fn kinds_follow_storage_and_cardinality() {
        let rows = (0..20)
            .map(|i| {
                vec![n(i as f64 * 1.5), n((i % 2) as f64), Value::Text(["a", "b"][i % 2].into()), n((i % 2) as f64)]
            })
            .collect();
        let t = toy(&["x", "flag", "cat", "y"], rows);
        let s = infer_schema(&t, "y").unwrap();
        let kinds: Vec<_> = s.iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            vec![ColumnKind::Numeric, ColumnKind::BinaryFlag, ColumnKind::Categorical, ColumnKind::Target]
        );
        assert!(s[0].stats.is_some());
        assert_eq!(s[2].cardinality, 2);
    }

    #[test]
    fn constant_column_has_zero_std_and_skew() {
        let st = NumericStats::compute(&[3.5; 12]).unwrap();
        assert_eq!(st.std, 0.0);
        assert_eq!(st.skewness, 0.0);
    }

    #[test]
    fn symmetric_sample_has_zero_skew() {
        let st = NumericStats::compute(&[-1.0, 0.0, 1.0]).unwrap();
        assert!(st.skewness.abs() < 1e-12);
        let right = NumericStats::compute(&[0.0, 0.0, 0.0, 10.0]).unwrap();
        assert!(right.skewness > 0.5);
    }

    #[test]
    fn unknown_target() {
        let t = toy(&["x"], vec![vec![n(1.0)]]);
        assert!(matches!(infer_schema(&t, "y"), Err(TabularError::UnknownTarget(_))));
    }

    #[test]
    fn stats_skip_missing() {
        let st = NumericStats::compute(&[1.0, f64::NAN, 3.0]).unwrap();
        assert_eq!(st.mean, 2.0);
        assert!((st.std - 2f64.sqrt()).abs() < 1e-12);
    }
}
