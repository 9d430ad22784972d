//! The model risk management crew: documentation compliance, replication,
//! conceptual soundness, outcome analysis, and the validation report.

mod compliance;
mod crew;
mod outcome;
mod replication;
mod report;
mod soundness;
mod tools;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::gateway::{Gateway, GatewayError};
use crate::memory::MemoryError;
use crate::model_lab::{ImportanceMethod, ModelError};
use crate::modeling::{self, read_json, Recipe};
use crate::orchestration::{CrewError, CrewOutput, RunEnv};
use crate::tabular::{self, Table, TabularError};

pub use compliance::{
    check_compliance, check_compliance_text, chunk_text, doc_sections, tokenize, ComplianceReport, ComplianceVerdict,
    Excerpt, StageCheck, TfIdf, CHUNK_CHARS, CHUNK_STRIDE, TOP_K,
};
pub use crew::{build_mrm_crew, mrm_catalog, mrm_inputs, mrm_task_ids, roles};
pub use outcome::{
    analyze_outcomes, numeric_feature_columns, perturb_outliers, perturb_shifted, OutcomeConfig, OutcomeMetrics,
    OutcomeReport, PerturbMode,
};
pub use replication::{
    replicate_model, ReplicationReport, ReplicationVerdict, CROSS_ENGINE_TOLERANCE, SAME_ENGINE_TOLERANCE,
};
pub use report::{overall_verdict, render_mrm_report, MrmResult, MrmVerdict, MRM_SECTIONS};
pub use soundness::{assess_soundness, parse_benchmarks, Benchmark, CheckItem, SoundnessReport, SoundnessVerdict};

/// The bundled organizational modeling guide.
pub const DEFAULT_GUIDE: &str = include_str!("../../assets/modeling_guide.txt");

pub mod files {
    pub const GUIDE: &str = "modeling_guide.txt";
    pub const COMPLIANCE: &str = "compliance.json";
    pub const REPLICATION: &str = "replication.json";
    pub const SOUNDNESS: &str = "soundness.json";
    pub const OUTCOME: &str = "outcome.json";
    pub const REPORT: &str = "mrm_report.txt";
    pub const RESULT: &str = "mrm_result.json";
    pub const CREW_OUTPUT: &str = "crew_output.jsonl";
    pub const MEMORY_LOG: &str = "memory_log.jsonl";
}

#[derive(Debug, Error)]
pub enum MrmError {
    #[error("file not found: {0}")]
    FileMissing(PathBuf),
    #[error("data not found: {0}")]
    DataMissing(PathBuf),
    #[error("the modeling guide is empty")]
    EmptyGuide,
    #[error("corrupt model artifact: {0}")]
    CorruptArtifact(String),
    #[error("no numeric columns to perturb")]
    NoNumericColumns,
    #[error("row {row} is out of range for a table with {n_rows} rows")]
    RowOutOfRange { row: usize, n_rows: usize },
    #[error("missing {0} sub-report")]
    MissingSubReport(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("crew output is incomplete: {0}")]
    IncompleteCrewOutput(String),
    #[error(transparent)]
    Tabular(TabularError),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Crew(#[from] CrewError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<TabularError> for MrmError {
    fn from(e: TabularError) -> Self {
        match e {
            TabularError::FileMissing(p) => MrmError::DataMissing(p),
            other => MrmError::Tabular(other),
        }
    }
}

impl From<ModelError> for MrmError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::FileMissing(p) => MrmError::FileMissing(p),
            ModelError::CorruptArtifact(m) => MrmError::CorruptArtifact(m),
            other => MrmError::Model(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, MrmError>;

pub(crate) fn load_table(path: &Path) -> Result<Table> {
    Ok(tabular::load_csv(path)?)
}

#[derive(Debug, Clone)]
pub struct MrmConfig {
    /// Run directory of the modeling crew.
    pub model_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Guide file; the bundled guide when absent.
    pub guide: Option<PathBuf>,
    pub outcome: OutcomeConfig,
    pub tolerance: f64,
    pub importance_method: Option<ImportanceMethod>,
}

impl MrmConfig {
    /// Defaults, writing to `<model_dir>/mrm`.
    pub fn new(model_dir: &Path) -> Self {
        MrmConfig {
            model_dir: model_dir.to_path_buf(),
            out_dir: model_dir.join("mrm"),
            guide: None,
            outcome: OutcomeConfig::default(),
            tolerance: SAME_ENGINE_TOLERANCE,
            importance_method: None,
        }
    }
}

pub struct MrmRun {
    pub crew_output: CrewOutput,
    pub result: MrmResult,
    pub report: String,
}

/// How to reach `model_dir` from `out_dir`: `../` steps when `out_dir` lies
/// inside it, otherwise the absolute path.
fn model_prefix(model_dir: &Path, out_dir: &Path) -> Result<String> {
    let m = model_dir.canonicalize().map_err(|_| MrmError::DataMissing(model_dir.to_path_buf()))?;
    let o = out_dir.canonicalize()?;
    if let Ok(rest) = o.strip_prefix(&m) {
        return Ok("../".repeat(rest.components().count()));
    }
    let mut s = m.to_string_lossy().into_owned();
    if !s.ends_with('/') {
        s.push('/');
    }
    Ok(s)
}

/// Runs the MRM crew over a finished modeling run.
pub fn run_mrm(config: &MrmConfig, gateway: &Gateway, seed: u64) -> Result<MrmRun> {
    let recipe_path = config.model_dir.join(modeling::files::RECIPE);
    if !recipe_path.is_file() {
        return Err(MrmError::DataMissing(recipe_path));
    }
    let recipe: Recipe = read_json(&recipe_path).map_err(MrmError::IncompleteCrewOutput)?;
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir)?;
    let guide = match &config.guide {
        Some(p) => std::fs::read_to_string(p).map_err(|_| MrmError::FileMissing(p.clone()))?,
        None => DEFAULT_GUIDE.to_string(),
    };
    if guide.trim().is_empty() {
        return Err(MrmError::EmptyGuide);
    }
    // a local copy keeps prompts free of machine-specific paths
    std::fs::write(dir.join(files::GUIDE), &guide)?;
    let prefix = model_prefix(&config.model_dir, dir)?;

    let spec = build_mrm_crew(&recipe, config);
    let mut crew = crate::orchestration::build_crew(spec, mrm_catalog())?
        .with_run_log(&crate::orchestration::run_log_path(dir))?;
    let result = crew.run(gateway, &mrm_inputs(&recipe, &prefix), &RunEnv::new(dir, seed));
    crew.memory().dump_jsonl(&dir.join(files::MEMORY_LOG))?;
    let crew_output = result?;
    modeling::write_crew_output(&crew_output, &dir.join(files::CREW_OUTPUT))?;
    let result: MrmResult = read_json(&dir.join(files::RESULT)).map_err(MrmError::IncompleteCrewOutput)?;
    let report = std::fs::read_to_string(dir.join(files::REPORT))
        .map_err(|_| MrmError::IncompleteCrewOutput(format!("{} was not written", files::REPORT)))?;
    Ok(MrmRun { crew_output, result, report })
}
