use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{label_of, Estimator, Family, FittedModel, ModelError, Result};
use crate::seed;

pub const PERMUTATION_REPEATS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportanceMethod {
    /// Absolute coefficients on standardized features (log-odds per sd).
    Coefficients,
    /// Normalized total split gain.
    Impurity,
    /// Mean accuracy drop when one column is shuffled.
    Permutation,
    /// Naive-Bayes class log-probabilities; recognized but no family supports it.
    LogProbability,
}

impl ImportanceMethod {
    pub fn default_for(family: Family) -> ImportanceMethod {
        if family.is_tree_based() {
            ImportanceMethod::Impurity
        } else {
            ImportanceMethod::Coefficients
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            ImportanceMethod::Coefficients => "coefficients",
            ImportanceMethod::Impurity => "impurity",
            ImportanceMethod::Permutation => "permutation",
            ImportanceMethod::LogProbability => "log-probability",
        }
    }

    pub fn parse(s: &str) -> Option<ImportanceMethod> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "coefficients" | "coef" => Some(ImportanceMethod::Coefficients),
            "impurity" | "gain" => Some(ImportanceMethod::Impurity),
            "permutation" => Some(ImportanceMethod::Permutation),
            "log-probability" | "log-prob" => Some(ImportanceMethod::LogProbability),
            _ => None,
        }
    }

    /// Whether `self` is a sensible choice for `family`.
    pub fn suits(self, family: Family) -> bool {
        match self {
            ImportanceMethod::Coefficients => family == Family::LogisticRegression,
            ImportanceMethod::Impurity => family.is_tree_based(),
            ImportanceMethod::Permutation => true,
            ImportanceMethod::LogProbability => false,
        }
    }
}

impl fmt::Display for ImportanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: ImportanceMethod,
    pub family: Family,
    /// Scores in feature order.
    pub scores: Vec<(String, f64)>,
}

impl ImportanceReport {
    /// Features by descending score; equal scores keep feature order.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut r = self.scores.clone();
        r.sort_by(|a, b| b.1.total_cmp(&a.1));
        r
    }

    pub fn top_k(&self, k: usize) -> Vec<(String, f64)> {
        self.ranked().into_iter().take(k).collect()
    }

    pub fn score(&self, feature: &str) -> Option<f64> {
        self.scores.iter().find(|(n, _)| n == feature).map(|(_, v)| *v)
    }
}

fn accuracy(est: &Estimator, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let hits = x.iter().zip(y).filter(|(r, &t)| f64::from(label_of(est.score_row(r))) == t).count();
    hits as f64 / y.len().max(1) as f64
}

/// Importance under `method`, or the family's default when `None`.
/// `x_test`/`y_test` are only read by the permutation method.
pub fn feature_importance(
    est: &Estimator,
    method: Option<ImportanceMethod>,
    x_test: &[Vec<f64>],
    y_test: &[f64],
    seed: u64,
) -> Result<ImportanceReport> {
    let method = method.unwrap_or_else(|| ImportanceMethod::default_for(est.family));
    let unsupported = ModelError::MethodUnsupported { method, family: est.family };
    let values: Vec<f64> = match method {
        ImportanceMethod::LogProbability => return Err(unsupported),
        ImportanceMethod::Coefficients => match &est.model {
            FittedModel::Logistic(m) => m.coef.iter().map(|c| c.abs()).collect(),
            _ => return Err(unsupported),
        },
        ImportanceMethod::Impurity => est.gain_importance().ok_or(unsupported)?,
        ImportanceMethod::Permutation => {
            if x_test.len() != y_test.len() {
                return Err(ModelError::LengthMismatch(x_test.len(), y_test.len()));
            }
            if x_test.is_empty() {
                return Err(ModelError::EmptyTrainingSet);
            }
            for row in x_test {
                if row.len() != est.n_features() {
                    return Err(ModelError::ArityMismatch { expected: est.n_features(), found: row.len() });
                }
            }
            let base = accuracy(est, x_test, y_test);
            (0..est.n_features())
                .into_par_iter()
                .map(|j| {
                    let mut drop = 0.0;
                    for r in 0..PERMUTATION_REPEATS {
                        let mut rng = seed::child(seed, seed::PERMIMP, (j * PERMUTATION_REPEATS + r) as u64);
                        let mut col: Vec<f64> = x_test.iter().map(|row| row[j]).collect();
                        col.shuffle(&mut rng);
                        let shuffled: Vec<Vec<f64>> = x_test
                            .iter()
                            .zip(&col)
                            .map(|(row, v)| {
                                let mut row = row.clone();
                                row[j] = *v;
                                row
                            })
                            .collect();
                        drop += base - accuracy(est, &shuffled, y_test);
                    }
                    drop / PERMUTATION_REPEATS as f64
                })
                .collect()
        }
    };
    Ok(ImportanceReport { method, family: est.family, scores: est.feature_names.iter().cloned().zip(values).collect() })
}
