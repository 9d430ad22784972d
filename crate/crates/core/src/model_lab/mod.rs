//! Estimators, evaluation metrics, cross-validated selection and tuning,
//! feature importance, and model artifacts.

mod artifact;
mod binning;
mod boosting;
mod forest;
mod hyper;
mod importance;
pub mod logistic;
mod metrics;
mod selection;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use artifact::{load_model, save_model, ARTIFACT_FORMAT, ARTIFACT_VERSION};
pub use binning::BinnedMatrix;
pub use boosting::Boosting;
pub use forest::Forest;
pub use hyper::{Grid, HyperValue, Hyperparams};
pub use importance::{feature_importance, ImportanceMethod, ImportanceReport, PERMUTATION_REPEATS};
pub use logistic::Logistic;
pub use metrics::{auc, capture_rate, compute_metrics, MetricsReport, DEFAULT_CAPTURE_FRACTION};
pub use selection::{
    cross_validate, default_grid, grid_search_select, stratified_folds, tune_hyperparameters, CvRow, SelectionResult,
};
pub use tree::{Node, Tree};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("target must be binary 0/1, found {0}")]
    NonBinaryTarget(f64),
    #[error("feature matrix contains missing values (row {row}, column {col})")]
    MissingValuesPresent { row: usize, col: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("hyperparameter '{key}' is not recognized for {family}")]
    UnknownHyperparam { family: Family, key: String },
    #[error("hyperparameter '{key}': {reason}")]
    BadHyperparam { key: String, reason: String },
    #[error("expected {expected} features, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("stratified {folds}-fold CV needs at least {folds} rows per class, class {class} has {count}")]
    TooFewPerClass { folds: usize, class: u8, count: usize },
    #[error("need at least 2 folds")]
    TooFewFolds,
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("importance method {method} is not supported for {family}")]
    MethodUnsupported { method: ImportanceMethod, family: Family },
    #[error("no positive labels; capture rate undefined")]
    NoPositives,
    #[error("fraction must be in (0, 1], got {0}")]
    BadFraction(f64),
    #[error("model artifact not found: {0}")]
    FileMissing(std::path::PathBuf),
    #[error("artifact format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model artifact: {0}")]
    CorruptArtifact(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LogisticRegression,
    DecisionTree,
    RandomForest,
    GradientBoosting,
}

impl Family {
    pub const ALL: [Family; 4] =
        [Family::LogisticRegression, Family::DecisionTree, Family::RandomForest, Family::GradientBoosting];

    pub fn id(self) -> &'static str {
        match self {
            Family::LogisticRegression => "logistic-regression",
            Family::DecisionTree => "decision-tree",
            Family::RandomForest => "random-forest",
            Family::GradientBoosting => "gradient-boosting",
        }
    }

    /// Human label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Family::LogisticRegression => "Logistic Regression",
            Family::DecisionTree => "Decision Tree",
            Family::RandomForest => "Random Forest",
            Family::GradientBoosting => "Gradient Boosting (XGBoost-style)",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        match norm.as_str() {
            "logistic-regression" | "lr" | "logistic" => Some(Family::LogisticRegression),
            "decision-tree" | "tree" | "dt" => Some(Family::DecisionTree),
            "random-forest" | "rf" | "forest" => Some(Family::RandomForest),
            "gradient-boosting" | "gbt" | "xgboost" | "gbm" => Some(Family::GradientBoosting),
            _ => None,
        }
    }

    pub fn is_tree_based(self) -> bool {
        !matches!(self, Family::LogisticRegression)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Fitted parameters of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedModel {
    Logistic(Logistic),
    Tree(Tree),
    Forest(Forest),
    Boosting(Boosting),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub family: Family,
    pub hyperparams: Hyperparams,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub model: FittedModel,
}

/// Validates labels and features; returns 0/1 labels.
pub(crate) fn check_training_data(x: &[Vec<f64>], y: &[f64]) -> Result<Vec<u8>> {
    if x.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch(x.len(), y.len()));
    }
    let width = x[0].len();
    for (r, row) in x.iter().enumerate() {
        if row.len() != width {
            return Err(ModelError::ArityMismatch { expected: width, found: row.len() });
        }
        if let Some(c) = row.iter().position(|v| v.is_nan()) {
            return Err(ModelError::MissingValuesPresent { row: r, col: c });
        }
    }
    y.iter()
        .map(|&v| match v {
            0.0 => Ok(0),
            1.0 => Ok(1),
            v => Err(ModelError::NonBinaryTarget(v)),
        })
        .collect()
}

/// Fits `family` with `hyperparams` on row-major `x` and 0/1 labels `y`.
pub fn fit(
    family: Family,
    hyperparams: &Hyperparams,
    feature_names: &[String],
    x: &[Vec<f64>],
    y: &[f64],
    seed: u64,
) -> Result<Estimator> {
    let hp = hyperparams.resolved(family)?;
    let labels = check_training_data(x, y)?;
    if !feature_names.is_empty() && feature_names.len() != x[0].len() {
        return Err(ModelError::ArityMismatch { expected: x[0].len(), found: feature_names.len() });
    }
    let model = match family {
        Family::LogisticRegression => FittedModel::Logistic(Logistic::fit(x, &labels, hp.real("l2")).0),
        Family::DecisionTree => {
            let binned = BinnedMatrix::new(x);
            let rows: Vec<u32> = (0..x.len() as u32).collect();
            FittedModel::Tree(tree::fit_gini_tree(&binned, &labels, &rows, hp.int("max_depth"), None))
        }
        Family::RandomForest => {
            FittedModel::Forest(Forest::fit(x, &labels, hp.int("n_estimators"), hp.int("max_depth"), seed))
        }
        Family::GradientBoosting => FittedModel::Boosting(Boosting::fit(
            x,
            &labels,
            hp.real("learning_rate"),
            hp.int("max_depth"),
            hp.int("n_estimators"),
        )),
    };
    let feature_names = if feature_names.is_empty() {
        (0..x[0].len()).map(|i| format!("x{i}")).collect()
    } else {
        feature_names.to_vec()
    };
    Ok(Estimator { family, hyperparams: hp, feature_names, seed, model })
}

impl Estimator {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_arity(&self, x: &[Vec<f64>]) -> Result<()> {
        for row in x {
            if row.len() != self.n_features() {
                return Err(ModelError::ArityMismatch { expected: self.n_features(), found: row.len() });
            }
        }
        Ok(())
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.model {
            FittedModel::Logistic(m) => m.score(row),
            FittedModel::Tree(t) => t.predict(row),
            FittedModel::Forest(f) => f.score(row),
            FittedModel::Boosting(b) => b.score(row),
        }
    }

    /// Probability of the positive class for each row, in [0, 1].
    pub fn predict_scores(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_arity(x)?;
        Ok(x.iter().map(|r| self.score_row(r)).collect())
    }

    /// Hard labels: 1 when the score is at least 0.5 (ties go positive).
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<u8>> {
        Ok(self.predict_scores(x)?.into_iter().map(label_of).collect())
    }

    /// Total split gain per feature, normalized to sum to 1 (all zero if no splits).
    pub fn gain_importance(&self) -> Option<Vec<f64>> {
        let raw = match &self.model {
            FittedModel::Logistic(_) => return None,
            FittedModel::Tree(t) => t.gains(self.n_features()),
            FittedModel::Forest(f) => f.gains(self.n_features()),
            FittedModel::Boosting(b) => b.gains(self.n_features()),
        };
        let total: f64 = raw.iter().sum();
        Some(if total > 0.0 { raw.iter().map(|g| g / total).collect() } else { raw })
    }
}

pub fn label_of(score: f64) -> u8 {
    u8::from(score >= 0.5)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary log-loss of probabilities `p`.
pub fn log_loss(y: &[u8], p: &[f64]) -> f64 {
    let eps = 1e-15;
    y.iter()
        .zip(p)
        .map(|(&yi, &pi)| {
            let pi = pi.clamp(eps, 1.0 - eps);
            if yi == 1 {
                -pi.ln()
            } else {
                -(1.0 - pi).ln()
            }
        })
        .sum::<f64>()
        / y.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(pairs: &[(&str, HyperValue)]) -> Hyperparams {
        Hyperparams::from_pairs(pairs.iter().map(|(k, v)| (k.to_string(), *v)))
    }

    fn xor() -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..5 {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                x.push(vec![a, b]);
                y.push(if a != b { 1.0 } else { 0.0 });
            }
        }
        (x, y)
    }

    #[test]
    fn zero_learning_rate_predicts_prior() {
        let (x, y) = xor();
        let y: Vec<f64> = y.iter().enumerate().map(|(i, v)| if i < 3 { 1.0 } else { *v }).collect();
        let e = fit(
            Family::GradientBoosting,
            &hp(&[
                ("learning_rate", HyperValue::Real(0.0)),
                ("max_depth", HyperValue::Int(3)),
                ("n_estimators", HyperValue::Int(10)),
            ]),
            &[],
            &x,
            &y,
            1,
        )
        .unwrap();
        let prior = y.iter().sum::<f64>() / y.len() as f64;
        for s in e.predict_scores(&x).unwrap() {
            assert!((s - prior).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_one_tree_cannot_solve_xor() {
        let (x, y) = xor();
        let e = fit(Family::DecisionTree, &hp(&[("max_depth", HyperValue::Int(1))]), &[], &x, &y, 1).unwrap();
        let pred = e.predict(&x).unwrap();
        let acc = pred.iter().zip(&y).filter(|(p, t)| **p as f64 == **t).count() as f64 / y.len() as f64;
        assert!(acc <= 0.75);
    }

    #[test]
    fn logistic_separates_two_points() {
        let x = vec![vec![-1.0, 0.5], vec![1.0, -0.5]];
        let y = vec![0.0, 1.0];
        let e = fit(Family::LogisticRegression, &Hyperparams::default(), &[], &x, &y, 1).unwrap();
        assert_eq!(e.predict(&x).unwrap(), vec![0, 1]);
    }

    #[test]
    fn constant_half_score_is_positive() {
        assert_eq!(label_of(0.5), 1);
        assert_eq!(label_of(0.4999999), 0);
    }

    #[test]
    fn input_validation() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            fit(Family::DecisionTree, &Hyperparams::default(), &[], &x, &[0.0, 2.0], 1),
            Err(ModelError::NonBinaryTarget(_))
        ));
        assert!(matches!(
            fit(Family::DecisionTree, &Hyperparams::default(), &[], &[vec![f64::NAN], vec![1.0]], &[0.0, 1.0], 1),
            Err(ModelError::MissingValuesPresent { row: 0, col: 0 })
        ));
        assert!(matches!(
            fit(Family::DecisionTree, &hp(&[("learning_rate", HyperValue::Real(0.1))]), &[], &x, &[0.0, 1.0], 1),
            Err(ModelError::UnknownHyperparam { .. })
        ));
        let e = fit(Family::DecisionTree, &Hyperparams::default(), &[], &x, &[0.0, 1.0], 1).unwrap();
        assert!(matches!(e.predict(&[vec![1.0, 2.0]]), Err(ModelError::ArityMismatch { expected: 1, found: 2 })));
    }
}
