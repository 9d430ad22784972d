//! Exploratory data analysis: the substance behind the EDA agent's tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::tabular::{class_proportions, infer_schema, Column, ColumnKind, ColumnSchema, Result, Table};

/// Columns with skewness above this are listed as positively skewed.
pub const SKEW_THRESHOLD: f64 = 0.5;
/// Pairs with |r| at or above this are called out as highly correlated.
pub const HIGH_CORRELATION: f64 = 0.8;
/// Name of the outlier rule, surfaced in the report.
pub const OUTLIER_METHOD: &str = "IQR rule (outside [Q1 - 1.5*IQR, Q3 + 1.5*IQR])";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub columns: Vec<String>,
    /// Row-major, symmetric, unit diagonal.
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.columns.iter().position(|c| c == a)?;
        let j = self.columns.iter().position(|c| c == b)?;
        Some(self.values[i][j])
    }

    /// Off-diagonal pairs (i < j) sorted by |r| descending, then by position.
    pub fn ranked_pairs(&self) -> Vec<(String, String, f64)> {
        let mut pairs = Vec::new();
        for i in 0..self.columns.len() {
            for j in i + 1..self.columns.len() {
                pairs.push((self.columns[i].clone(), self.columns[j].clone(), self.values[i][j]));
            }
        }
        pairs.sort_by(|a, b| b.2.abs().partial_cmp(&a.2.abs()).unwrap_or(std::cmp::Ordering::Equal));
        pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaReport {
    pub target: String,
    pub shape: (usize, usize),
    /// Missing fraction of every column, in column order.
    pub missing: Vec<(String, f64)>,
    pub correlation: CorrelationMatrix,
    pub stats: Vec<ColumnSchema>,
    pub skewed_positive: Vec<String>,
    pub imbalance: BTreeMap<String, f64>,
    pub outlier_counts: BTreeMap<String, usize>,
    pub outlier_method: String,
    pub categorical_needing_encoding: Vec<String>,
}

impl EdaReport {
    pub fn columns_with_missing(&self) -> Vec<(&str, f64)> {
        self.missing.iter().filter(|(_, f)| *f > 0.0).map(|(n, f)| (n.as_str(), *f)).collect()
    }

    pub fn numeric_columns(&self) -> Vec<&str> {
        self.stats.iter().filter(|c| c.kind == ColumnKind::Numeric).map(|c| c.name.as_str()).collect()
    }

    pub fn categorical_columns(&self) -> Vec<&str> {
        self.stats.iter().filter(|c| c.kind.is_categorical_like()).map(|c| c.name.as_str()).collect()
    }

    /// Majority class and its share.
    pub fn majority(&self) -> Option<(&str, f64)> {
        self.imbalance
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(k, v)| (k.as_str(), *v))
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Linear-interpolated quantile of sorted data (the usual `q·(n−1)` rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn iqr_outliers(values: &[f64]) -> usize {
    let mut xs: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if xs.len() < 2 {
        return 0;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quantile_sorted(&xs, 0.25);
    let q3 = quantile_sorted(&xs, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    xs.iter().filter(|&&v| v < lo || v > hi).count()
}

pub fn run_eda(table: &Table, target: &str) -> Result<EdaReport> {
    let stats = infer_schema(table, target)?;
    let imbalance = class_proportions(table, target)?;
    let numeric: Vec<&ColumnSchema> = stats.iter().filter(|c| c.kind == ColumnKind::Numeric).collect();

    // Pairwise-complete correlation over the numeric columns.
    let cols: Vec<&[f64]> = numeric.iter().map(|c| table.numeric(&c.name).unwrap()).collect();
    let k = cols.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in i + 1..k {
            let (x, y): (Vec<f64>, Vec<f64>) =
                cols[i].iter().zip(cols[j]).filter(|(a, b)| !a.is_nan() && !b.is_nan()).map(|(a, b)| (*a, *b)).unzip();
            let r = if x.len() < 2 { 0.0 } else { pearson(&x, &y) };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    let correlation = CorrelationMatrix { columns: numeric.iter().map(|c| c.name.clone()).collect(), values };

    let skewed_positive = numeric
        .iter()
        .filter(|c| c.stats.as_ref().is_some_and(|s| s.skewness > SKEW_THRESHOLD))
        .map(|c| c.name.clone())
        .collect();
    let outlier_counts = numeric.iter().zip(&cols).map(|(c, v)| (c.name.clone(), iqr_outliers(v))).collect();
    let categorical_needing_encoding = stats
        .iter()
        .filter(|c| c.kind == ColumnKind::Categorical)
        .filter(|c| matches!(table.column(&c.name), Some(Column::Text(_))))
        .map(|c| c.name.clone())
        .collect();

    Ok(EdaReport {
        target: target.to_string(),
        shape: table.shape(),
        missing: table.missing_fractions(),
        correlation,
        stats,
        skewed_positive,
        imbalance,
        outlier_counts,
        outlier_method: OUTLIER_METHOD.to_string(),
        categorical_needing_encoding,
    })
}

fn quoted(names: &[impl AsRef<str>]) -> String {
    if names.is_empty() {
        return "none".to_string();
    }
    names.iter().map(|n| format!("'{}'", n.as_ref())).collect::<Vec<_>>().join(", ")
}

fn pct(f: f64) -> String {
    format!("{:.2}%", f * 100.0)
}

/// Renders the report in four fixed sections.
pub fn render_eda_summary(report: &EdaReport) -> String {
    let mut s = String::from("## Exploratory Data Analysis Report\n\n## Dataset Overview\n");
    let _ = writeln!(s, "- The dataset contains {} rows and {} columns.", report.shape.0, report.shape.1);
    let _ = writeln!(s, "- The target variable is the '{}' column.", report.target);
    let missing = report.columns_with_missing();
    if missing.is_empty() {
        let _ = writeln!(s, "- 0 features have missing values.");
    } else {
        let list: Vec<String> = missing.iter().map(|(n, f)| format!("'{n}' ({} missing)", pct(*f))).collect();
        let _ = writeln!(s, "- {} features have missing values: {}.", missing.len(), list.join(", "));
    }
    if let Some((label, share)) = report.majority() {
        let balance = if share >= 0.6 { "imbalanced" } else { "balanced" };
        let _ =
            writeln!(s, "- The dataset is {balance} with '{}' value {label} at {} of rows.", report.target, pct(share));
    }

    s.push_str("\n## Feature Analysis\n");
    let _ = writeln!(s, "- Numeric Features: {}.", quoted(&report.numeric_columns()));
    let _ = writeln!(s, "- Categorical Features: {}.", quoted(&report.categorical_columns()));
    let _ = writeln!(
        s,
        "- Categorical features that need label encoding: {}.",
        quoted(&report.categorical_needing_encoding)
    );
    let _ = writeln!(s, "- Positively skewed features: {}.", quoted(&report.skewed_positive));
    let outliers: Vec<String> =
        report.outlier_counts.iter().filter(|(_, c)| **c > 0).map(|(n, c)| format!("'{n}' ({c})")).collect();
    let _ = writeln!(
        s,
        "- Outliers by {}: {}.",
        report.outlier_method,
        if outliers.is_empty() { "none".to_string() } else { outliers.join(", ") }
    );

    s.push_str("\n## Descriptive Statistics\n");
    for col in &report.stats {
        if let Some(st) = &col.stats {
            let _ = writeln!(
                s,
                "- '{}': Mean={:.2}, Std={:.2}, Min={:?}, Max={:?}, Skewness={:.2}",
                col.name, st.mean, st.std, st.min, st.max, st.skewness
            );
        }
    }

    s.push_str("\n## Correlation Analysis\n");
    let high: Vec<_> =
        report.correlation.ranked_pairs().into_iter().filter(|(_, _, r)| r.abs() >= HIGH_CORRELATION).collect();
    if high.is_empty() {
        let _ = writeln!(s, "- No pair of numeric features has |r| >= {HIGH_CORRELATION}.");
    }
    for (a, b, r) in high {
        let _ = writeln!(s, "- '{a}' is highly correlated with '{b}' (r={r:.2}).");
    }
    s
}
