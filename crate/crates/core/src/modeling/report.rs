use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tools::{read_eda, render_metrics, FeReport};
use super::{files, read_json, task_ids, ModelingError, Recipe, Result};
use crate::model_lab::{MetricsReport, SelectionResult};
use crate::orchestration::{CrewOutput, TaskOutput};

/// Documentation section headings, one per modeling stage, in pipeline order.
pub const STAGES: [&str; 6] = [
    "Exploratory Data Analysis",
    "Feature Engineering",
    "Model Selection",
    "Hyperparameter Tuning",
    "Model Training",
    "Model Evaluation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub heading: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelingReport {
    pub recipe: String,
    pub sections: Vec<Section>,
    pub metrics: MetricsReport,
    /// Run-directory files the documentation draws on.
    pub artifacts: Vec<String>,
}

impl ModelingReport {
    pub fn section(&self, heading: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.heading == heading)
    }

    pub fn render(&self) -> String {
        let mut s = format!("# Technical Documentation: {} model\n", self.recipe);
        for sec in &self.sections {
            let _ = write!(s, "\n## {}\n\n{}", sec.heading, sec.body);
            if !sec.body.ends_with('\n') {
                s.push('\n');
            }
        }
        s.push_str("\n## Artifacts\n\n");
        for a in &self.artifacts {
            let _ = writeln!(s, "- {a}");
        }
        s
    }
}

const REQUIRED: [&str; 7] = [
    files::EDA_REPORT,
    files::FE_REPORT,
    files::SELECTION,
    files::TUNING,
    files::HYPERPARAMS,
    files::MODEL,
    files::METRICS,
];

fn incomplete(msg: impl Into<String>) -> ModelingError {
    ModelingError::IncompleteCrewOutput(msg.into())
}

fn pct(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

/// Builds the six stage sections from the run directory. Every stage task
/// must have finished and every stage artifact must exist.
pub fn collect_report(dir: &Path, completed: &[TaskOutput], recipe: &Recipe) -> Result<ModelingReport> {
    let ids = task_ids();
    for id in &ids[..STAGES.len()] {
        if !completed.iter().any(|t| t.task_id == *id) {
            return Err(incomplete(format!("task '{id}' has no output")));
        }
    }
    for f in REQUIRED {
        if !dir.join(f).is_file() {
            return Err(incomplete(format!("artifact '{f}' is missing")));
        }
    }
    let eda = read_eda(dir).map_err(incomplete)?;
    let fe: FeReport = read_json(&dir.join(files::FE_REPORT)).map_err(incomplete)?;
    let sel: SelectionResult = read_json(&dir.join(files::SELECTION)).map_err(incomplete)?;
    let tuning: SelectionResult = read_json(&dir.join(files::TUNING)).map_err(incomplete)?;
    let metrics: MetricsReport = read_json(&dir.join(files::METRICS)).map_err(incomplete)?;
    let mut bodies = Vec::new();

    let mut b = String::new();
    let _ = writeln!(b, "- Dataset: {} rows x {} columns, target '{}'.", eda.shape.0, eda.shape.1, eda.target);
    let _ = writeln!(b, "- Numeric features: {}.", list(&eda.numeric_columns()));
    let _ = writeln!(b, "- Categorical features: {}.", list(&eda.categorical_columns()));
    let missing = eda.columns_with_missing();
    if missing.is_empty() {
        let _ = writeln!(b, "- Missing values: none.");
    } else {
        let parts: Vec<String> = missing.iter().map(|(c, f)| format!("{c} ({})", pct(*f))).collect();
        let _ = writeln!(b, "- Missing values: {}.", parts.join(", "));
    }
    let class_parts: Vec<String> = eda.imbalance.iter().map(|(k, v)| format!("{k}: {}", pct(*v))).collect();
    let _ = writeln!(b, "- Class distribution of '{}': {}.", eda.target, class_parts.join(", "));
    for (a, c, r) in eda.correlation.ranked_pairs().into_iter().take(3) {
        let _ = writeln!(b, "- Correlation {a} / {c}: {r:.3}.");
    }
    if !eda.skewed_positive.is_empty() {
        let _ = writeln!(b, "- Positively skewed: {}.", eda.skewed_positive.join(", "));
    }
    let outliers: Vec<String> =
        eda.outlier_counts.iter().filter(|(_, &n)| n > 0).map(|(c, n)| format!("{c} ({n})")).collect();
    if !outliers.is_empty() {
        let _ = writeln!(b, "- Outliers ({}): {}.", eda.outlier_method, outliers.join(", "));
    }
    bodies.push(b);

    let mut b = String::new();
    for (i, st) in fe.steps.iter().enumerate() {
        let _ = writeln!(b, "{}. {}", i + 1, st.detail);
    }
    let _ = writeln!(
        b,
        "- Output: train {} x {}, test {} x {} ({}, {}).",
        fe.train_shape.0,
        fe.train_shape.1,
        fe.test_shape.0,
        fe.test_shape.1,
        files::TRAIN2,
        files::TEST2
    );
    bodies.push(b);

    let mut b = String::new();
    let _ = writeln!(b, "- Selected model: {}.", sel.family.label());
    let _ = writeln!(b, "- Rationale: {}", sel.rationale);
    for row in &sel.cv_table {
        let _ = writeln!(b, "- {}: mean CV accuracy {:.4}.", row.family.label(), row.mean_accuracy);
    }
    bodies.push(b);

    let mut b = String::new();
    let _ = writeln!(
        b,
        "- {} combinations of {} searched with {}-fold cross validation.",
        tuning.cv_table.len(),
        tuning.family.label(),
        tuning.folds
    );
    for (k, v) in tuning.hyperparams.iter() {
        let _ = writeln!(b, "- {k}: {v}");
    }
    let _ = writeln!(b, "- Best mean CV accuracy: {:.4}.", tuning.mean_accuracy);
    bodies.push(b);

    let mut b = String::new();
    let _ = writeln!(b, "- Model: {} trained on {}.", tuning.family.label(), files::TRAIN2);
    let _ = writeln!(b, "- Hyperparameters: {}.", tuning.hyperparams);
    let _ = writeln!(b, "- Saved model: {}.", files::MODEL);
    bodies.push(b);

    let mut b = format!("- Test set: {}.\n", files::TEST2);
    b.push_str(&render_metrics(&metrics));
    bodies.push(b);

    let sections = STAGES.iter().zip(bodies).map(|(h, body)| Section { heading: h.to_string(), body }).collect();
    Ok(ModelingReport {
        recipe: recipe.name.id().to_string(),
        sections,
        metrics,
        artifacts: REQUIRED.iter().map(|s| s.to_string()).collect(),
    })
}

fn list(items: &[&str]) -> String {
    if items.is_empty() {
        "none".to_string()
    } else {
        items.join(", ")
    }
}

/// The documentation text for `crew_output`, read against the recipe's run
/// directory.
pub fn render_documentation(crew_output: &CrewOutput, recipe: &Recipe) -> Result<String> {
    Ok(collect_report(&recipe.output_dir, &crew_output.task_outputs, recipe)?.render())
}
