//! Command-line surface for the modeling and MRM crews.
//!
//! `parse_cli` turns argv (plus an optional `key=value` config file) into a
//! [`RunConfig`]; `run_command` executes it and returns the process exit code.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

// a closed stdout (e.g. piped into `head`) is not an error
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

use crewlab_core::eda::{render_eda_summary, run_eda};
use crewlab_core::gateway::{
    ChatBackend, Gateway, LiveBackend, RecordBackend, ReplayBackend, ScriptedBackend, Transcript,
};
use crewlab_core::model_lab::{Family, Grid, HyperValue, ImportanceMethod};
use crewlab_core::modeling::{render_metrics, run_recipe, Recipe, RecipeName, Strategy};
use crewlab_core::mrm::{run_mrm, MrmConfig, MrmVerdict, PerturbMode};
use crewlab_core::synth::SynthParams;
use crewlab_core::tabular::{load_csv, write_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FLAGGED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("unknown command: {0}")]
    UnknownCommand(String),
    #[error("missing required flag --{0}")]
    MissingFlag(String),
    #[error("bad value for {key}: {reason}")]
    BadValue { key: String, reason: String },
    /// `--help` or `--version`; the text goes to stdout.
    #[error("{0}")]
    Help(String),
}

fn bad(key: &str, reason: impl Into<String>) -> CliError {
    CliError::BadValue { key: key.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eda,
    ModelRun,
    MrmRun,
    Synth,
    ReplayVerify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Live,
    Replay,
    Record,
}

/// What answers requests in record mode before they are written down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordSource {
    Live,
    Scripted,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    /// CSV file for `eda`; dataset directory for real recipes.
    pub data: Option<PathBuf>,
    pub guide: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub target: Option<String>,
    pub strategy: Option<Strategy>,
    pub grids: BTreeMap<Family, Grid>,
    pub perturb_mode: Option<PerturbMode>,
    pub perturb_magnitude: Option<f64>,
    pub outlier_rows: Option<Vec<usize>>,
    pub outlier_magnitude: Option<f64>,
    pub sensitivity_threshold: Option<f64>,
    pub tolerance: Option<f64>,
    pub importance: Option<ImportanceMethod>,
    pub rows: Option<usize>,
    pub numeric: Option<usize>,
    pub categorical: Option<usize>,
    pub imbalance: Option<f64>,
    pub signal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub recipe: Option<RecipeName>,
    pub seed: u64,
    pub mode: Mode,
    pub record_source: RecordSource,
    pub paths: Paths,
    pub overrides: Overrides,
}

#[derive(Parser)]
#[command(name = "crewlab", version, about = "Agentic modeling and model-risk crews")]
struct Cli {
    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand)]
enum Top {
    /// Profile a CSV file.
    Eda(Flags),
    /// Run the modeling crew.
    Model {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Run the model risk management crew over a modeling run.
    Mrm {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Write a synthetic dataset.
    Synth(Flags),
    /// Check a transcript, optionally by replaying a full run.
    Replay {
        #[command(subcommand)]
        action: VerifyAction,
    },
}

#[derive(Subcommand)]
enum RunAction {
    Run(Flags),
}

#[derive(Subcommand)]
enum VerifyAction {
    Verify(Flags),
}

/// Every flag is read as text so that flag and config-file values go
/// through the same validation.
#[derive(Args, Default)]
struct Flags {
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    recipe: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// live, replay or record
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    transcript: Option<String>,
    /// live or scripted
    #[arg(long)]
    record_source: Option<String>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    guide: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    model_dir: Option<String>,
    /// smote or downsample
    #[arg(long)]
    strategy: Option<String>,
    /// family:key=v1,v2;key=v1  (repeatable)
    #[arg(long)]
    grid: Vec<String>,
    /// add-random, add-fixed or multiply-fixed
    #[arg(long)]
    perturb_mode: Option<String>,
    #[arg(long)]
    perturb_magnitude: Option<String>,
    /// comma-separated test-row indices
    #[arg(long)]
    outlier_rows: Option<String>,
    #[arg(long)]
    outlier_magnitude: Option<String>,
    #[arg(long)]
    sensitivity_threshold: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    importance: Option<String>,
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    numeric: Option<String>,
    #[arg(long)]
    categorical: Option<String>,
    #[arg(long)]
    imbalance: Option<String>,
    #[arg(long)]
    signal: Option<String>,
}

const CONFIG_KEYS: &[&str] = &[
    "recipe",
    "seed",
    "mode",
    "transcript",
    "record-source",
    "data",
    "target",
    "guide",
    "out",
    "model-dir",
    "strategy",
    "grid",
    "perturb-mode",
    "perturb-magnitude",
    "outlier-rows",
    "outlier-magnitude",
    "sensitivity-threshold",
    "tolerance",
    "importance",
    "rows",
    "numeric",
    "categorical",
    "imbalance",
    "signal",
];

/// Flat `key=value` lines; `#` starts a comment line. `grid` may repeat,
/// any other key keeps its last value. Underscores in keys read as dashes.
pub fn parse_config_text(text: &str) -> Result<(BTreeMap<String, String>, Vec<String>), CliError> {
    let mut values = BTreeMap::new();
    let mut grids = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| bad("config", format!("line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(bad("config", format!("line {}: unknown key {key}", i + 1)));
        }
        let v = v.trim().to_string();
        if key == "grid" {
            grids.push(v);
        } else {
            values.insert(key, v);
        }
    }
    Ok((values, grids))
}

impl Flags {
    fn into_map(self) -> (BTreeMap<String, String>, Vec<String>) {
        let mut m = BTreeMap::new();
        let pairs = [
            ("recipe", self.recipe),
            ("seed", self.seed),
            ("mode", self.mode),
            ("transcript", self.transcript),
            ("record-source", self.record_source),
            ("data", self.data),
            ("target", self.target),
            ("guide", self.guide),
            ("out", self.out),
            ("model-dir", self.model_dir),
            ("strategy", self.strategy),
            ("perturb-mode", self.perturb_mode),
            ("perturb-magnitude", self.perturb_magnitude),
            ("outlier-rows", self.outlier_rows),
            ("outlier-magnitude", self.outlier_magnitude),
            ("sensitivity-threshold", self.sensitivity_threshold),
            ("tolerance", self.tolerance),
            ("importance", self.importance),
            ("rows", self.rows),
            ("numeric", self.numeric),
            ("categorical", self.categorical),
            ("imbalance", self.imbalance),
            ("signal", self.signal),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        }
        (m, self.grid)
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse::<T>().map_err(|_| bad(key, format!("cannot parse {v:?}")))
}

fn parse_real(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = parse_num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, "must be finite"))
    }
}

/// `family:key=v1,v2;key=v1`
pub fn parse_grid(spec: &str) -> Result<(Family, Grid), CliError> {
    let (fam, rest) = spec.split_once(':').ok_or_else(|| bad("grid", format!("{spec:?} lacks family:")))?;
    let family = Family::parse(fam).ok_or_else(|| bad("grid", format!("unknown model family {fam:?}")))?;
    let mut params = Vec::new();
    for part in rest.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, vs) = part.split_once('=').ok_or_else(|| bad("grid", format!("{part:?} lacks key=")))?;
        let values = vs
            .split(',')
            .map(|v| HyperValue::parse(v).ok_or_else(|| bad("grid", format!("bad value {v:?} for {k}"))))
            .collect::<Result<Vec<_>, _>>()?;
        params.push((k.trim().to_string(), values));
    }
    if params.is_empty() {
        return Err(bad("grid", format!("{spec:?} names no parameters")));
    }
    Ok((family, Grid { params }))
}

fn map_clap(e: clap::Error) -> CliError {
    let full = e.to_string();
    let first = full.lines().next().unwrap_or_default();
    let text = first.strip_prefix("error: ").unwrap_or(first).to_string();
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Help(e.render().to_string()),
        ErrorKind::InvalidSubcommand => CliError::UnknownCommand(text),
        ErrorKind::MissingSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            CliError::UnknownCommand("missing subcommand (see --help)".into())
        }
        ErrorKind::MissingRequiredArgument => CliError::MissingFlag(text),
        _ => bad("arguments", text),
    }
}

/// Parses arguments, with or without the leading program name.
pub fn parse_cli<S: AsRef<str>>(argv: &[S]) -> Result<RunConfig, CliError> {
    let mut args: Vec<String> = argv.iter().map(|s| s.as_ref().to_string()).collect();
    if args.first().is_none_or(|a| a.starts_with('-') || is_command_word(a)) {
        args.insert(0, "crewlab".into());
    }
    let cli = Cli::try_parse_from(&args).map_err(map_clap)?;
    let (command, flags) = match cli.command {
        Top::Eda(f) => (Command::Eda, f),
        Top::Model { action: RunAction::Run(f) } => (Command::ModelRun, f),
        Top::Mrm { action: RunAction::Run(f) } => (Command::MrmRun, f),
        Top::Synth(f) => (Command::Synth, f),
        Top::Replay { action: VerifyAction::Verify(f) } => (Command::ReplayVerify, f),
    };
    let config_path = flags.config.clone();
    let (flag_values, flag_grids) = flags.into_map();
    let (mut values, mut grid_specs) = match &config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| bad("config", format!("{p}: {e}")))?;
            parse_config_text(&text)?
        }
        None => (BTreeMap::new(), Vec::new()),
    };
    values.extend(flag_values);
    grid_specs.extend(flag_grids);
    build_config(command, &values, &grid_specs)
}

fn is_command_word(a: &str) -> bool {
    matches!(a, "eda" | "model" | "mrm" | "synth" | "replay" | "help")
}

fn build_config(command: Command, v: &BTreeMap<String, String>, grid_specs: &[String]) -> Result<RunConfig, CliError> {
    let get = |k: &str| v.get(k).map(String::as_str);
    let path = |k: &str| get(k).map(PathBuf::from);
    let require = |k: &str| get(k).ok_or_else(|| CliError::MissingFlag(k.to_string()));

    let recipe = get("recipe")
        .map(|s| RecipeName::parse(s).ok_or_else(|| bad("recipe", format!("unknown recipe {s:?}"))))
        .transpose()?;
    let seed_required = matches!(command, Command::ModelRun | Command::MrmRun | Command::Synth)
        || (command == Command::ReplayVerify && recipe.is_some());
    let seed = match get("seed") {
        Some(s) => parse_num::<u64>("seed", s)?,
        None if seed_required => return Err(CliError::MissingFlag("seed".into())),
        None => 0,
    };
    let mode = match get("mode") {
        None | Some("live") => Mode::Live,
        Some("replay") => Mode::Replay,
        Some("record") => Mode::Record,
        Some(other) => return Err(bad("mode", format!("expected live, replay or record, got {other:?}"))),
    };
    let mode = if command == Command::ReplayVerify { Mode::Replay } else { mode };
    let record_source = match get("record-source") {
        None | Some("live") => RecordSource::Live,
        Some("scripted") => RecordSource::Scripted,
        Some(other) => return Err(bad("record-source", format!("expected live or scripted, got {other:?}"))),
    };
    let paths = Paths {
        data: path("data"),
        guide: path("guide"),
        out: path("out"),
        transcript: path("transcript"),
        model_dir: path("model-dir"),
    };
    let uses_gateway = matches!(command, Command::ModelRun | Command::MrmRun | Command::ReplayVerify);
    if uses_gateway && mode != Mode::Live && paths.transcript.is_none() {
        return Err(CliError::MissingFlag("transcript".into()));
    }
    match command {
        Command::Eda => {
            require("data")?;
            require("target")?;
        }
        Command::ModelRun => {
            let name = recipe.ok_or_else(|| CliError::MissingFlag("recipe".into()))?;
            if name != RecipeName::Synthetic {
                require("data")?;
            }
        }
        Command::MrmRun => {
            require("model-dir")?;
        }
        Command::Synth => {
            require("out")?;
        }
        Command::ReplayVerify => {}
    }

    let mut grids = BTreeMap::new();
    for spec in grid_specs {
        let (family, grid) = parse_grid(spec)?;
        grids.insert(family, grid);
    }
    let real = |k: &str| get(k).map(|s| parse_real(k, s)).transpose();
    let count = |k: &str| get(k).map(|s| parse_num::<usize>(k, s)).transpose();
    let overrides = Overrides {
        target: get("target").map(str::to_string),
        strategy: get("strategy")
            .map(|s| Strategy::parse(s).ok_or_else(|| bad("strategy", format!("unknown strategy {s:?}"))))
            .transpose()?,
        grids,
        perturb_mode: get("perturb-mode")
            .map(|s| PerturbMode::parse(s).ok_or_else(|| bad("perturb-mode", format!("unknown mode {s:?}"))))
            .transpose()?,
        perturb_magnitude: real("perturb-magnitude")?,
        outlier_rows: get("outlier-rows")
            .map(|s| {
                s.split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| parse_num::<usize>("outlier-rows", p))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?,
        outlier_magnitude: real("outlier-magnitude")?,
        sensitivity_threshold: real("sensitivity-threshold")?,
        tolerance: real("tolerance")?,
        importance: get("importance")
            .map(|s| ImportanceMethod::parse(s).ok_or_else(|| bad("importance", format!("unknown method {s:?}"))))
            .transpose()?,
        rows: count("rows")?,
        numeric: count("numeric")?,
        categorical: count("categorical")?,
        imbalance: real("imbalance")?,
        signal: real("signal")?,
    };
    if overrides.tolerance.is_some_and(|t| t < 0.0) {
        return Err(bad("tolerance", "must be non-negative"));
    }
    Ok(RunConfig { command, recipe, seed, mode, record_source, paths, overrides })
}

impl RunConfig {
    /// Generator parameters for `synth` and the synthetic recipe; the data
    /// seed is the run seed.
    pub fn synth_params(&self) -> SynthParams {
        let o = &self.overrides;
        let d = SynthParams::default();
        SynthParams {
            n_rows: o.rows.unwrap_or(d.n_rows),
            n_numeric: o.numeric.unwrap_or(d.n_numeric),
            n_categorical: o.categorical.unwrap_or(d.n_categorical),
            imbalance: o.imbalance.unwrap_or(d.imbalance),
            signal_strength: o.signal.unwrap_or(d.signal_strength),
            seed: self.seed,
        }
    }

    pub fn recipe(&self) -> Option<Recipe> {
        let name = self.recipe?;
        let out = self
            .paths
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-{}", name.id(), self.seed)));
        let data = self.paths.data.clone().unwrap_or_default();
        let mut r = match name {
            RecipeName::Synthetic => Recipe::synthetic(self.synth_params(), &out),
            RecipeName::Fraud => Recipe::fraud(&data, &out, self.overrides.strategy.unwrap_or(Strategy::Downsample)),
            other => Recipe::named(other, &data, &out),
        };
        if let Some(s) = self.overrides.strategy {
            r.strategy = s;
        }
        for (family, grid) in &self.overrides.grids {
            r.grids.insert(*family, grid.clone());
        }
        Some(r)
    }

    pub fn mrm_config(&self, model_dir: &Path) -> MrmConfig {
        let mut c = MrmConfig::new(model_dir);
        if let Some(out) = &self.paths.out {
            c.out_dir = out.clone();
        }
        c.guide = self.paths.guide.clone();
        let o = &self.overrides;
        if let Some(m) = o.perturb_mode {
            c.outcome.mode = m;
        }
        if let Some(v) = o.perturb_magnitude {
            c.outcome.magnitude = v;
        }
        if let Some(rows) = &o.outlier_rows {
            c.outcome.outlier_rows = rows.clone();
        }
        if let Some(v) = o.outlier_magnitude {
            c.outcome.outlier_magnitude = v;
        }
        if let Some(v) = o.sensitivity_threshold {
            c.outcome.sensitivity_threshold = v;
        }
        if let Some(t) = o.tolerance {
            c.tolerance = t;
        }
        c.importance_method = o.importance;
        c
    }

    pub fn gateway(&self) -> Result<Gateway, String> {
        let transcript = || self.paths.transcript.clone().ok_or("a transcript path is required".to_string());
        let backend: Box<dyn ChatBackend> = match self.mode {
            Mode::Live => Box::new(LiveBackend::from_env().map_err(|e| e.to_string())?),
            Mode::Replay => Box::new(ReplayBackend::open(&transcript()?).map_err(|e| e.to_string())?),
            Mode::Record => {
                let inner: Box<dyn ChatBackend> = match self.record_source {
                    RecordSource::Live => Box::new(LiveBackend::from_env().map_err(|e| e.to_string())?),
                    RecordSource::Scripted => Box::new(ScriptedBackend::new()),
                };
                Box::new(RecordBackend::open(inner, &transcript()?).map_err(|e| e.to_string())?)
            }
        };
        Ok(Gateway::new(backend))
    }
}

/// Executes `config`: 0 on success, 1 when the MRM flags the model, 2 on
/// any error (diagnostic on stderr).
pub fn run_command(config: &RunConfig) -> i32 {
    match execute(config) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

fn execute(config: &RunConfig) -> Result<i32, String> {
    match config.command {
        Command::Eda => cmd_eda(config),
        Command::Synth => cmd_synth(config),
        Command::ModelRun => {
            let gw = config.gateway()?;
            cmd_model(config, &gw)
        }
        Command::MrmRun => {
            let gw = config.gateway()?;
            let dir = config.paths.model_dir.clone().ok_or("--model-dir is required")?;
            cmd_mrm(config, &gw, &dir)
        }
        Command::ReplayVerify => cmd_verify(config),
    }
}

fn cmd_eda(config: &RunConfig) -> Result<i32, String> {
    let data = config.paths.data.as_ref().ok_or("--data is required")?;
    let target = config.overrides.target.as_deref().ok_or("--target is required")?;
    let table = load_csv(data).map_err(|e| e.to_string())?;
    let report = run_eda(&table, target).map_err(|e| e.to_string())?;
    if let Some(out) = &config.paths.out {
        std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
        let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n";
        let path = out.join("eda_report.json");
        std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    out!("{}", render_eda_summary(&report));
    Ok(EXIT_OK)
}

fn cmd_synth(config: &RunConfig) -> Result<i32, String> {
    let out = config.paths.out.as_ref().ok_or("--out is required")?;
    let params = config.synth_params();
    let table = params.generate().map_err(|e| e.to_string())?;
    write_csv(&table, out).map_err(|e| e.to_string())?;
    let (rows, cols) = table.shape();
    out!("wrote {} ({rows} rows, {cols} columns)", out.display());
    Ok(EXIT_OK)
}

fn cmd_model(config: &RunConfig, gw: &Gateway) -> Result<i32, String> {
    let recipe = config.recipe().ok_or("--recipe is required")?;
    let run = run_recipe(&recipe, gw, config.seed).map_err(|e| e.to_string())?;
    out!("modeling run written to {}", recipe.output_dir.display());
    print!("{}", render_metrics(&run.report.metrics));
    out!("gateway calls: {} ({} over the network)", gw.calls(), gw.network_calls());
    Ok(EXIT_OK)
}

fn cmd_mrm(config: &RunConfig, gw: &Gateway, model_dir: &Path) -> Result<i32, String> {
    let mrm = config.mrm_config(model_dir);
    let run = run_mrm(&mrm, gw, config.seed).map_err(|e| e.to_string())?;
    let r = &run.result;
    out!("MRM report written to {}", mrm.out_dir.display());
    out!("compliance: {}", r.compliance.id());
    if !r.compliance_gaps.is_empty() {
        out!("  gaps: {}", r.compliance_gaps.join(", "));
    }
    out!("replication: {}", r.replication.id());
    out!("soundness: {}", r.soundness.id());
    out!(
        "outcome accuracy: baseline {} shifted {} outlier {}",
        r.baseline.accuracy,
        r.shifted_inputs.accuracy,
        r.adversarial_outlier_inputs.accuracy
    );
    out!("overall: {}", r.overall.id());
    Ok(if r.overall == MrmVerdict::Flagged { EXIT_FLAGGED } else { EXIT_OK })
}

/// Loads the transcript; with `--recipe` also replays the modeling run and
/// its MRM run, which fails on the first request the transcript lacks.
fn cmd_verify(config: &RunConfig) -> Result<i32, String> {
    let path = config.paths.transcript.as_ref().ok_or("--transcript is required")?;
    let t = Transcript::load(path).map_err(|e| e.to_string())?;
    out!("{}: {} recorded responses", path.display(), t.len());
    if config.recipe.is_none() {
        return Ok(EXIT_OK);
    }
    let gw = config.gateway()?;
    cmd_model(config, &gw)?;
    let recipe = config.recipe().expect("checked above");
    let mut mrm_config = config.clone();
    mrm_config.paths.out = None;
    cmd_mrm(&mrm_config, &gw, &recipe.output_dir)?;
    out!("replay complete: every request matched the transcript");
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_model_run_parses() {
        let c = parse_cli(&[
            "model",
            "run",
            "--recipe",
            "credit",
            "--seed",
            "42",
            "--mode",
            "replay",
            "--transcript",
            "t.rec",
            "--data",
            "d",
        ])
        .unwrap();
        assert_eq!(c.command, Command::ModelRun);
        assert_eq!(c.recipe, Some(RecipeName::Credit));
        assert_eq!(c.seed, 42);
        assert_eq!(c.mode, Mode::Replay);
        assert_eq!(c.paths.transcript, Some(PathBuf::from("t.rec")));
    }

    #[test]
    fn program_name_is_optional() {
        let a = parse_cli(&["crewlab", "synth", "--seed", "1", "--out", "x.csv"]).unwrap();
        let b = parse_cli(&["synth", "--seed", "1", "--out", "x.csv"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replay_needs_transcript() {
        let e = parse_cli(&["model", "run", "--recipe", "synthetic", "--seed", "1", "--mode", "replay"]).unwrap_err();
        assert_eq!(e, CliError::MissingFlag("transcript".into()));
        let e = parse_cli(&["mrm", "run", "--model-dir", "m", "--seed", "1", "--mode", "record"]).unwrap_err();
        assert_eq!(e, CliError::MissingFlag("transcript".into()));
    }

    #[test]
    fn bad_seed() {
        let e = parse_cli(&["model", "run", "--recipe", "synthetic", "--seed", "abc"]).unwrap_err();
        assert!(matches!(e, CliError::BadValue { ref key, .. } if key == "seed"), "{e:?}");
    }

    #[test]
    fn seed_is_required() {
        let e = parse_cli(&["model", "run", "--recipe", "synthetic"]).unwrap_err();
        assert_eq!(e, CliError::MissingFlag("seed".into()));
    }

    #[test]
    fn unknown_command() {
        assert!(matches!(parse_cli(&["train"]), Err(CliError::UnknownCommand(_))));
        assert!(matches!(parse_cli(&["model", "fit"]), Err(CliError::UnknownCommand(_))));
    }

    #[test]
    fn config_file_with_flag_override() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tmp.path().join("run.cfg");
        std::fs::write(
            &cfg,
            "# run\nrecipe = synthetic\nseed=7\nperturb_mode=add-fixed\ntolerance=0.02\ngrid=gbt:learning_rate=0.05,0.1;max_depth=3\n",
        )
        .unwrap();
        let c = parse_cli(&["model", "run", "--config", cfg.to_str().unwrap(), "--seed", "9"]).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.recipe, Some(RecipeName::Synthetic));
        assert_eq!(c.overrides.perturb_mode, Some(PerturbMode::AddFixed));
        assert_eq!(c.overrides.tolerance, Some(0.02));
        let g = &c.overrides.grids[&Family::GradientBoosting];
        assert_eq!(g.combos().len(), 2);
        assert!(c.recipe().unwrap().grids.contains_key(&Family::GradientBoosting));

        std::fs::write(&cfg, "colour=blue\n").unwrap();
        let e = parse_cli(&["synth", "--config", cfg.to_str().unwrap()]).unwrap_err();
        assert!(matches!(e, CliError::BadValue { .. }));
    }

    #[test]
    fn bad_grid_and_mode() {
        assert!(parse_grid("gbt:max_depth=3,x").is_err());
        assert!(parse_grid("nope:max_depth=3").is_err());
        let e = parse_cli(&["model", "run", "--recipe", "synthetic", "--seed", "1", "--mode", "dream"]).unwrap_err();
        assert!(matches!(e, CliError::BadValue { ref key, .. } if key == "mode"));
    }

    #[test]
    fn missing_data_exits_2() {
        let tmp = tempfile::tempdir().unwrap();
        let t = tmp.path().join("t.rec");
        std::fs::write(&t, "").unwrap();
        let out = tmp.path().join("out");
        let c = parse_cli(&[
            "model",
            "run",
            "--recipe",
            "credit",
            "--seed",
            "42",
            "--mode",
            "replay",
            "--transcript",
            t.to_str().unwrap(),
            "--data",
            tmp.path().join("none").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(run_command(&c), EXIT_ERROR);
        let c = parse_cli(&["eda", "--data", "/nonexistent.csv", "--target", "y"]).unwrap();
        assert_eq!(run_command(&c), EXIT_ERROR);
    }

    #[test]
    fn synth_then_eda() {
        let tmp = tempfile::tempdir().unwrap();
        let csv = tmp.path().join("s.csv");
        let c = parse_cli(&["synth", "--seed", "3", "--rows", "300", "--out", csv.to_str().unwrap()]).unwrap();
        assert_eq!(run_command(&c), EXIT_OK);
        let c = parse_cli(&[
            "eda",
            "--data",
            csv.to_str().unwrap(),
            "--target",
            "target",
            "--out",
            tmp.path().to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(run_command(&c), EXIT_OK);
        assert!(tmp.path().join("eda_report.json").is_file());
        let c = parse_cli(&["synth", "--seed", "3", "--imbalance", "0.3", "--out", csv.to_str().unwrap()]).unwrap();
        assert_eq!(run_command(&c), EXIT_ERROR);
    }
}
