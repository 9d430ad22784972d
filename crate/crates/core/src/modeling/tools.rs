use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{evaluate_table, files, read_json, render_documentation, write_json, ModelingError, Recipe, Strategy};
use crate::eda::{render_eda_summary, run_eda, EdaReport};
use crate::model_lab::{
    self, grid_search_select, load_model, save_model, tune_hyperparameters, Family, Grid, HyperValue, Hyperparams,
    MetricsReport, ModelError, SelectionResult,
};
use crate::orchestration::{
    opt_bool, opt_f64, opt_str, str_field, str_list, CrewOutput, Tool, ToolContext, ToolError, ToolOutput,
};
use crate::seed;
use crate::tabular::{
    apply_label_encoders, class_proportions, fit_label_encoders, infer_schema, load_csv, random_downsample, smote,
    write_csv, ImputerState, Table, TabularError,
};

type ToolResult = Result<ToolOutput, ToolError>;

fn tab_err(e: TabularError) -> ToolError {
    match e {
        // the agent may retry with a corrected path
        TabularError::FileMissing(_) | TabularError::UnknownTarget(_) | TabularError::UnknownColumn(_) => {
            ToolError::recoverable(e.to_string())
        }
        other => ToolError::fatal(other.to_string()),
    }
}

fn model_err(e: ModelError) -> ToolError {
    match e {
        ModelError::FileMissing(_) | ModelError::UnknownHyperparam { .. } | ModelError::BadHyperparam { .. } => {
            ToolError::recoverable(e.to_string())
        }
        other => ToolError::fatal(other.to_string()),
    }
}

fn io_err(e: std::io::Error) -> ToolError {
    ToolError::fatal(e.to_string())
}

fn load(ctx: &ToolContext, path: &str) -> Result<Table, ToolError> {
    load_csv(ctx.resolve(path)).map_err(tab_err)
}

type Matrix = (Vec<String>, Vec<Vec<f64>>, Vec<f64>);

fn matrix(t: &Table, target: &str) -> Result<Matrix, ToolError> {
    let (names, x, y) = t.features_and_labels(target).map_err(tab_err)?;
    Ok((names, x, y.into_iter().map(f64::from).collect()))
}

fn usize_field(input: &Map<String, Value>, key: &str, default: usize) -> Result<usize, ToolError> {
    match opt_f64(input, key)? {
        None => Ok(default),
        Some(v) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
        Some(v) => Err(ToolError::recoverable(format!("field '{key}' must be a positive integer, got {v}"))),
    }
}

fn family_field(input: &Map<String, Value>, ctx: &ToolContext) -> Result<Family, ToolError> {
    if let Some(s) = opt_str(input, "family") {
        return Family::parse(s).ok_or_else(|| ToolError::recoverable(format!("unknown model family '{s}'")));
    }
    let sel: SelectionResult = read_json(&ctx.resolve(files::SELECTION))
        .map_err(|e| ToolError::recoverable(format!("no 'family' given and no model selection found ({e})")))?;
    Ok(sel.family)
}

/// `{"max_depth": [3, 5]}` into a grid, keys in the given order.
fn grid_from_json(v: &Value) -> Result<Grid, ToolError> {
    let bad = || ToolError::recoverable("grid must map parameter names to lists of numbers");
    let obj = v.as_object().ok_or_else(bad)?;
    let mut params = Vec::new();
    for (k, vals) in obj {
        let list = vals.as_array().ok_or_else(bad)?;
        let parsed = list
            .iter()
            .map(|x| match x {
                Value::Number(n) if n.is_i64() => Ok(HyperValue::Int(n.as_i64().unwrap())),
                Value::Number(n) => Ok(HyperValue::Real(n.as_f64().unwrap())),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        params.push((k.clone(), parsed));
    }
    Ok(Grid { params })
}

pub fn grid_to_json(grid: &Grid) -> Value {
    let mut m = Map::new();
    for (k, vals) in &grid.params {
        m.insert(k.clone(), Value::Array(vals.iter().map(|v| serde_json::to_value(v).unwrap()).collect()));
    }
    Value::Object(m)
}

pub struct EdaTool;

impl Tool for EdaTool {
    fn id(&self) -> &str {
        "eda"
    }
    fn name(&self) -> &str {
        "Exploratory Data Analysis Tool"
    }
    fn description(&self) -> &str {
        "Profiles a CSV: shape, missing values, feature types, statistics, correlations, class balance."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![("csv_path", "CSV file to analyse"), ("target", "target column name")]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let path = str_field(input, "csv_path")?;
        let target = str_field(input, "target")?;
        let table = load(ctx, path)?;
        let report = run_eda(&table, target).map_err(tab_err)?;
        write_json(&ctx.resolve(files::EDA_REPORT), &report).map_err(io_err)?;
        Ok(ToolOutput::text(render_eda_summary(&report)).with_artifact("eda report", files::EDA_REPORT))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeStep {
    pub name: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeReport {
    /// Transformations actually applied, in order.
    pub steps: Vec<FeStep>,
    pub dropped: Vec<String>,
    pub encoded_columns: Vec<String>,
    pub imputed_cells_train: usize,
    pub imputed_cells_test: usize,
    pub proportions_train: BTreeMap<String, f64>,
    pub proportions_test: BTreeMap<String, f64>,
    pub train_shape: (usize, usize),
    pub test_shape: (usize, usize),
}

fn missing_cells(t: &Table) -> usize {
    t.columns().iter().map(|c| c.missing_count()).sum()
}

fn max_share(p: &BTreeMap<String, f64>) -> f64 {
    p.values().copied().fold(0.0, f64::max)
}

fn shares(p: &BTreeMap<String, f64>) -> String {
    p.iter().map(|(k, v)| format!("{k}: {:.2}%", v * 100.0)).collect::<Vec<_>>().join(", ")
}

pub struct FeatureEngineeringTool;

impl Tool for FeatureEngineeringTool {
    fn id(&self) -> &str {
        "feature_engineering"
    }
    fn name(&self) -> &str {
        "Feature Engineering Tool"
    }
    fn description(&self) -> &str {
        "Drops columns, label-encodes categoricals, KNN-imputes missing values and rebalances classes; \
         every transformation is fitted on train and applied to test."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("train_path", "train CSV"),
            ("test_path", "test CSV"),
            ("target", "target column"),
            ("drop", "columns to drop"),
            ("strategy", "smote or downsample"),
            ("imbalance_threshold", "rebalance when a class share reaches this"),
            ("resample_test", "also rebalance the test set"),
            ("train_output", "output train CSV"),
            ("test_output", "output test CSV"),
        ]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let target = str_field(input, "target")?;
        let mut train = load(ctx, str_field(input, "train_path")?)?;
        let mut test = load(ctx, str_field(input, "test_path")?)?;
        let drop = str_list(input, "drop")?;
        let strategy_name = opt_str(input, "strategy").unwrap_or("smote");
        let strategy = Strategy::parse(strategy_name)
            .ok_or_else(|| ToolError::recoverable(format!("unknown strategy '{strategy_name}'")))?;
        let threshold = opt_f64(input, "imbalance_threshold")?.unwrap_or(0.6);
        let resample_test = opt_bool(input, "resample_test")?.unwrap_or(true);
        let k_impute = usize_field(input, "impute_k", 5)?;
        let k_smote = usize_field(input, "smote_k", 5)?;
        let train_out = opt_str(input, "train_output").unwrap_or(files::TRAIN2);
        let test_out = opt_str(input, "test_output").unwrap_or(files::TEST2);
        let mut steps = Vec::new();

        if !drop.is_empty() {
            let refs: Vec<&str> = drop.iter().map(String::as_str).collect();
            train = train.drop_columns(&refs).map_err(tab_err)?;
            test = test.drop_columns(&refs).map_err(tab_err)?;
            steps.push(FeStep {
                name: "drop".into(),
                detail: format!("Dropped {} from both the train and test datasets.", quoted(&drop)),
            });
        }

        let schema = infer_schema(&train, target).map_err(tab_err)?;
        let encoders = fit_label_encoders(&train, &schema);
        let encoded: Vec<String> = encoders.columns().map(str::to_string).collect();
        if !encoded.is_empty() {
            train = apply_label_encoders(&encoders, &train).map_err(tab_err)?;
            test = apply_label_encoders(&encoders, &test).map_err(tab_err)?;
            steps.push(FeStep {
                name: "label-encoding".into(),
                detail: format!(
                    "Label encoding of the categorical features {}: fit_transform on train, transform on test.",
                    quoted(&encoded)
                ),
            });
        }

        let (miss_train, miss_test) = (missing_cells(&train), missing_cells(&test));
        if miss_train + miss_test > 0 {
            let imputer = ImputerState::fit(&train, k_impute, &[target]).map_err(tab_err)?;
            train = imputer.transform(&train).map_err(tab_err)?;
            test = imputer.transform(&test).map_err(tab_err)?;
            steps.push(FeStep {
                name: "knn-imputation".into(),
                detail: format!(
                    "K-Nearest Neighbors imputation (k={k_impute}) fitted on train: filled {miss_train} train \
                     cells (fit_transform) and {miss_test} test cells (transform)."
                ),
            });
        }

        let p_train = class_proportions(&train, target).map_err(tab_err)?;
        let p_test = class_proportions(&test, target).map_err(tab_err)?;
        let triggered = max_share(&p_train) >= threshold || (resample_test && max_share(&p_test) >= threshold);
        steps.push(FeStep {
            name: "class-balance-check".into(),
            detail: format!(
                "Checked the '{target}' class proportions against the {:.0}% threshold: train {{{}}}, test {{{}}}.",
                threshold * 100.0,
                shares(&p_train),
                shares(&p_test)
            ),
        });
        if triggered {
            let test_seed = seed::derive(ctx.seed, "resample-test", 0);
            let (name, label) = match strategy {
                Strategy::Smote => ("smote", "SMOTE (Synthetic Minority Over-sampling Technique)"),
                Strategy::Downsample => ("downsample", "Random downsampling of the majority class"),
            };
            let apply = |t: &Table, s: u64| match strategy {
                Strategy::Smote => smote(t, target, k_smote, s),
                Strategy::Downsample => random_downsample(t, target, s),
            };
            let before = (train.n_rows(), test.n_rows());
            train = apply(&train, ctx.seed).map_err(tab_err)?;
            if resample_test {
                test = apply(&test, test_seed).map_err(tab_err)?;
            }
            let scope = if resample_test { "the train and test datasets separately" } else { "the train dataset" };
            steps.push(FeStep {
                name: name.into(),
                detail: format!(
                    "{label} applied to {scope}: train {} -> {} rows, test {} -> {} rows.",
                    before.0,
                    train.n_rows(),
                    before.1,
                    test.n_rows()
                ),
            });
        }

        write_csv(&train, ctx.resolve(train_out)).map_err(tab_err)?;
        write_csv(&test, ctx.resolve(test_out)).map_err(tab_err)?;
        let report = FeReport {
            steps,
            dropped: drop,
            encoded_columns: encoded,
            imputed_cells_train: miss_train,
            imputed_cells_test: miss_test,
            proportions_train: p_train,
            proportions_test: p_test,
            train_shape: train.shape(),
            test_shape: test.shape(),
        };
        write_json(&ctx.resolve(files::FE_REPORT), &report).map_err(io_err)?;

        let mut s = String::from("## Feature Engineering Report:\n\n");
        for (i, st) in report.steps.iter().enumerate() {
            let _ = writeln!(s, "{}. {}", i + 1, st.detail);
        }
        let _ = writeln!(
            s,
            "\nTransformed train data saved as '{train_out}' ({} x {}); transformed test data saved as '{test_out}' ({} x {}).",
            report.train_shape.0, report.train_shape.1, report.test_shape.0, report.test_shape.1
        );
        Ok(ToolOutput::text(s)
            .with_artifact("transformed train", train_out)
            .with_artifact("transformed test", test_out)
            .with_artifact("feature engineering report", files::FE_REPORT))
    }
}

fn quoted(names: &[String]) -> String {
    names.iter().map(|n| format!("'{n}'")).collect::<Vec<_>>().join(", ")
}

pub struct ModelSelectionTool;

impl Tool for ModelSelectionTool {
    fn id(&self) -> &str {
        "model_selection"
    }
    fn name(&self) -> &str {
        "Model Selection Tool"
    }
    fn description(&self) -> &str {
        "Grid-search cross-validation over candidate model families; returns the best family and the rationale."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("train_path", "transformed train CSV"),
            ("target", "target column"),
            ("candidates", "model families to compare"),
            ("folds", "number of stratified folds"),
        ]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let target = str_field(input, "target")?;
        let train = load(ctx, str_field(input, "train_path")?)?;
        let folds = usize_field(input, "folds", 5)?;
        let mut families = Vec::new();
        for name in str_list(input, "candidates")? {
            families.push(
                Family::parse(&name).ok_or_else(|| ToolError::recoverable(format!("unknown model family '{name}'")))?,
            );
        }
        if families.is_empty() {
            families = Family::ALL.to_vec();
        }
        let (_, x, y) = matrix(&train, target)?;
        let candidates: Vec<(Family, Grid)> = families.into_iter().map(|f| (f, Grid::default())).collect();
        let result = grid_search_select(&candidates, &x, &y, folds, ctx.seed).map_err(model_err)?;
        write_json(&ctx.resolve(files::SELECTION), &result).map_err(io_err)?;

        let mut s = format!(
            "## Model Selection Report\n\n### Best Machine Learning Model: {}\n\n#### Rationale:\n{}\n\n#### Cross-validation ({} folds):\n",
            result.family.label(),
            result.rationale,
            result.folds
        );
        for row in &result.cv_table {
            let _ = writeln!(s, "- {} {}: mean accuracy {:.4}", row.family.label(), row.hyperparams, row.mean_accuracy);
        }
        Ok(ToolOutput::text(s).with_artifact("model selection", files::SELECTION))
    }
}

pub struct TuningTool;

impl Tool for TuningTool {
    fn id(&self) -> &str {
        "hyperparameter_tuning"
    }
    fn name(&self) -> &str {
        "Hyperparameter Tuning Tool"
    }
    fn description(&self) -> &str {
        "Grid-search cross-validation over the selected family's hyperparameters; saves the best set as text."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("train_path", "transformed train CSV"),
            ("target", "target column"),
            ("family", "model family (defaults to the selected one)"),
            ("grids", "per-family grids, e.g. {\"gradient-boosting\": {\"max_depth\": [3, 5]}}"),
            ("folds", "number of stratified folds"),
            ("output", "hyperparameter text file"),
        ]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let target = str_field(input, "target")?;
        let train = load(ctx, str_field(input, "train_path")?)?;
        let family = family_field(input, ctx)?;
        let folds = usize_field(input, "folds", 5)?;
        let output = opt_str(input, "output").unwrap_or(files::HYPERPARAMS);
        let grid = match input.get("grids").and_then(|g| g.get(family.id())) {
            Some(g) => grid_from_json(g)?,
            None => model_lab::default_grid(family),
        };
        let (_, x, y) = matrix(&train, target)?;
        let result = tune_hyperparameters(family, &grid, &x, &y, folds, ctx.seed).map_err(model_err)?;
        std::fs::write(ctx.resolve(output), result.hyperparams.to_text()).map_err(io_err)?;
        write_json(&ctx.resolve(files::TUNING), &result).map_err(io_err)?;

        let mut s =
            format!("## Hyperparameter Tuning Report\n\n### Best Hyperparameters for {} Model\n", family.label());
        for (k, v) in result.hyperparams.iter() {
            let _ = writeln!(s, "- {k}: {v}");
        }
        let _ = write!(
            s,
            "\nThese hyperparameters were tuned using {folds}-fold cross validation over {} combinations \
             (best mean accuracy {:.4}) and saved to '{output}'.\n",
            result.cv_table.len(),
            result.mean_accuracy
        );
        Ok(ToolOutput::text(s).with_artifact("hyperparameters", output).with_artifact("tuning", files::TUNING))
    }
}

pub struct TrainingTool;

impl Tool for TrainingTool {
    fn id(&self) -> &str {
        "model_training"
    }
    fn name(&self) -> &str {
        "Model Training Tool"
    }
    fn description(&self) -> &str {
        "Trains the selected family with the tuned hyperparameters and saves the model artifact."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("train_path", "transformed train CSV"),
            ("target", "target column"),
            ("family", "model family (defaults to the selected one)"),
            ("hyperparams_path", "tuned hyperparameter file"),
            ("model_path", "where to save the model"),
        ]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let target = str_field(input, "target")?;
        let train_path = str_field(input, "train_path")?;
        let train = load(ctx, train_path)?;
        let family = family_field(input, ctx)?;
        let hp_path = opt_str(input, "hyperparams_path").unwrap_or(files::HYPERPARAMS);
        let model_path = opt_str(input, "model_path").unwrap_or(files::MODEL);
        let hp_text = std::fs::read_to_string(ctx.resolve(hp_path))
            .map_err(|e| ToolError::recoverable(format!("cannot read '{hp_path}': {e}")))?;
        let hp = Hyperparams::from_text(&hp_text).map_err(ToolError::recoverable)?;
        let (names, x, y) = matrix(&train, target)?;
        let est = model_lab::fit(family, &hp, &names, &x, &y, ctx.seed).map_err(model_err)?;
        save_model(&est, &ctx.resolve(model_path)).map_err(model_err)?;
        let s = format!(
            "## Model Training Report\n\n### Training Conclusion\nThe {} model was trained on '{train_path}' \
             ({} rows, {} features, target '{target}') with hyperparameters {}.\n\n\
             ### Location of the Saved Model\nThe trained model has been saved at '{model_path}'.\n",
            family.label(),
            x.len(),
            names.len(),
            est.hyperparams
        );
        Ok(ToolOutput::text(s).with_artifact("model", model_path))
    }
}

pub struct EvaluationTool;

pub fn render_metrics(m: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "- Accuracy: {}", m.accuracy);
    let _ = writeln!(s, "- F1-score: {}", m.f1);
    let _ = writeln!(s, "- Recall: {}", m.recall);
    let _ = writeln!(s, "- Precision: {}", m.precision);
    if let Some(v) = m.auc_label {
        let _ = writeln!(s, "- AUC: {v}");
    }
    if let Some(v) = m.auc {
        let _ = writeln!(s, "- ROC AUC (scores): {v}");
    }
    if let Some(v) = m.capture_rate {
        let _ = writeln!(s, "- Top-decile capture rate: {v}");
    }
    let c = &m.confusion;
    let _ = writeln!(s, "- Confusion: tp={} fp={} tn={} fn={}", c.tp, c.fp, c.tn, c.fn_);
    s
}

impl Tool for EvaluationTool {
    fn id(&self) -> &str {
        "model_evaluation"
    }
    fn name(&self) -> &str {
        "Model Evaluation Tool"
    }
    fn description(&self) -> &str {
        "Evaluates a saved model on test data: accuracy, F1-score, recall, precision, AUC and capture rate."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![("model_path", "saved model"), ("test_path", "transformed test CSV"), ("target", "target column")]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let target = str_field(input, "target")?;
        let model_path = str_field(input, "model_path")?;
        let est = load_model(&ctx.resolve(model_path)).map_err(model_err)?;
        let test = load(ctx, str_field(input, "test_path")?)?;
        let metrics = evaluate_table(&est, &test, target).map_err(|e| match e {
            ModelingError::Tabular(t) => tab_err(t),
            other => ToolError::fatal(other.to_string()),
        })?;
        write_json(&ctx.resolve(files::METRICS), &metrics).map_err(io_err)?;
        let s = format!("Model Evaluation Metrics:\n\n{}", render_metrics(&metrics));
        Ok(ToolOutput::text(s).with_artifact("metrics", files::METRICS))
    }
}

pub struct DocumentationTool {
    pub recipe: Arc<Recipe>,
}

impl Tool for DocumentationTool {
    fn id(&self) -> &str {
        "write_documentation"
    }
    fn name(&self) -> &str {
        "Documentation Writer Tool"
    }
    fn description(&self) -> &str {
        "Writes the technical documentation of every modeling stage from the team's results."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![("output", "documentation text file")]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let output = opt_str(input, "output").unwrap_or(files::DOCUMENTATION);
        let partial = CrewOutput {
            task_outputs: ctx.completed.to_vec(),
            artifacts: Vec::new(),
            started_at: String::new(),
            finished_at: String::new(),
            failed: false,
        };
        let mut recipe = (*self.recipe).clone();
        recipe.output_dir = ctx.workdir.to_path_buf();
        let text = render_documentation(&partial, &recipe).map_err(|e| ToolError::fatal(e.to_string()))?;
        std::fs::write(ctx.resolve(output), &text).map_err(io_err)?;
        Ok(ToolOutput::text(text).with_artifact("documentation", output))
    }
}

pub(crate) fn read_eda(dir: &Path) -> Result<EdaReport, String> {
    read_json(&dir.join(files::EDA_REPORT))
}
