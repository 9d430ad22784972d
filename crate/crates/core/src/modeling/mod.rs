//! The modeling crew: recipes, the seven pipeline tools, the crew
//! definition, and the technical documentation it produces.

mod crew;
mod recipe;
mod report;
mod tools;

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::gateway::Gateway;
use crate::memory::MemoryError;
use crate::model_lab::{compute_metrics, label_of, Estimator, MetricsReport, ModelError};
use crate::orchestration::{CrewError, CrewOutput, RunEnv};
use crate::synth::SynthError;
use crate::tabular::{self, Table, TabularError};

pub use crew::{build_modeling_crew, modeling_catalog, modeling_inputs, roles, task_ids};
pub use recipe::{summarize_credit_records, Recipe, RecipeName, Strategy, TargetTransform};
pub use report::{collect_report, render_documentation, ModelingReport, Section, STAGES};
pub use tools::{render_metrics, FeReport, FeStep};

/// File names inside a run directory.
pub mod files {
    pub const DATA: &str = "data.csv";
    pub const TRAIN: &str = "train.csv";
    pub const TEST: &str = "test.csv";
    pub const TRAIN2: &str = "train2.csv";
    pub const TEST2: &str = "test2.csv";
    pub const EDA_REPORT: &str = "eda_report.json";
    pub const FE_REPORT: &str = "fe_report.json";
    pub const SELECTION: &str = "selection.json";
    pub const TUNING: &str = "tuning.json";
    pub const HYPERPARAMS: &str = "hyper_params.txt";
    pub const MODEL: &str = "model.json";
    pub const METRICS: &str = "metrics.json";
    pub const DOCUMENTATION: &str = "crew_documentation.txt";
    pub const REPORT: &str = "report.json";
    pub const CREW_OUTPUT: &str = "crew_output.jsonl";
    pub const MEMORY_LOG: &str = "memory_log.jsonl";
    pub const RECIPE: &str = "recipe.json";
}

#[derive(Debug, Error)]
pub enum ModelingError {
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error("input data not found: {0}")]
    DataMissing(PathBuf),
    #[error("crew output is incomplete: {0}")]
    IncompleteCrewOutput(String),
    #[error("data columns {found:?} do not match the model's features {expected:?}")]
    FeatureMismatch { expected: Vec<String>, found: Vec<String> },
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Crew(#[from] CrewError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelingError>;

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
}

/// Metrics of `est` on a table holding its feature columns and `target`;
/// other columns are ignored.
pub fn evaluate_table(est: &Estimator, table: &Table, target: &str) -> Result<MetricsReport> {
    let mut x = vec![Vec::with_capacity(est.n_features()); table.n_rows()];
    for name in &est.feature_names {
        let col = table.numeric(name).map_err(|_| ModelingError::FeatureMismatch {
            expected: est.feature_names.clone(),
            found: table.column_names().iter().filter(|n| *n != target).cloned().collect(),
        })?;
        for (row, v) in x.iter_mut().zip(col) {
            row.push(*v);
        }
    }
    let y = table.binary_labels(target)?;
    let scores = est.predict_scores(&x)?;
    let pred: Vec<u8> = scores.iter().map(|&s| label_of(s)).collect();
    Ok(compute_metrics(&y, &pred, &scores)?)
}

pub struct RecipeRun {
    pub crew_output: CrewOutput,
    pub report: ModelingReport,
    pub documentation: String,
}

/// Splits the data, runs the modeling crew through `gateway`, and writes the
/// run directory (see [`files`]).
pub fn run_recipe(recipe: &Recipe, gateway: &Gateway, seed: u64) -> Result<RecipeRun> {
    recipe.validate()?;
    let dir = &recipe.output_dir;
    std::fs::create_dir_all(dir)?;
    // the persisted copy names its own directory relatively
    let mut persisted = recipe.clone();
    persisted.output_dir = PathBuf::from(".");
    write_json(&dir.join(files::RECIPE), &persisted)?;
    let data = recipe.prepare_data()?;
    tabular::write_csv(&data, dir.join(files::DATA))?;
    // the split comes before any feature engineering
    let (train, test) = tabular::train_test_split(&data, recipe.split_ratio, seed)?;
    tabular::write_csv(&train, dir.join(files::TRAIN))?;
    tabular::write_csv(&test, dir.join(files::TEST))?;

    let spec = build_modeling_crew(recipe)?;
    let mut crew = crate::orchestration::build_crew(spec, modeling_catalog(recipe))?
        .with_run_log(&crate::orchestration::run_log_path(dir))?;
    let env = RunEnv::new(dir, seed);
    let result = crew.run(gateway, &modeling_inputs(recipe), &env);
    crew.memory().dump_jsonl(&dir.join(files::MEMORY_LOG))?;
    let crew_output = result?;
    write_crew_output(&crew_output, &dir.join(files::CREW_OUTPUT))?;

    let report = collect_report(dir, &crew_output.task_outputs, recipe)?;
    write_json(&dir.join(files::REPORT), &report)?;
    let doc_path = dir.join(files::DOCUMENTATION);
    let documentation = std::fs::read_to_string(&doc_path)
        .map_err(|_| ModelingError::IncompleteCrewOutput(format!("{} was not written", files::DOCUMENTATION)))?;
    Ok(RecipeRun { crew_output, report, documentation })
}

/// JSON lines: a header with the run timestamps, one line per task output,
/// then the artifact index. Only the header varies between identical runs.
pub fn write_crew_output(out: &CrewOutput, path: &Path) -> std::io::Result<()> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let header =
        serde_json::json!({"started_at": out.started_at, "finished_at": out.finished_at, "failed": out.failed});
    let _ = writeln!(s, "{header}");
    for t in &out.task_outputs {
        let _ = writeln!(s, "{}", serde_json::to_string(t).map_err(std::io::Error::other)?);
    }
    let _ = writeln!(s, "{}", serde_json::json!({ "artifacts": out.artifacts }));
    std::fs::write(path, s)
}
