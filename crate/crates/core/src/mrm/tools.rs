use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{
    analyze_outcomes, assess_soundness, check_compliance, files, numeric_feature_columns, read_json, render_mrm_report,
    replicate_model, ComplianceReport, MrmError, MrmResult, OutcomeConfig, OutcomeReport, PerturbMode,
    ReplicationReport, SoundnessReport, SAME_ENGINE_TOLERANCE,
};
use crate::model_lab::{load_model, ImportanceMethod, MetricsReport};
use crate::modeling::FeReport;
use crate::orchestration::{opt_f64, opt_str, str_field, str_list, Tool, ToolContext, ToolError, ToolOutput};
use crate::tabular::load_csv;

type ToolResult = Result<ToolOutput, ToolError>;

fn mrm_err(e: MrmError) -> ToolError {
    match e {
        MrmError::FileMissing(_) | MrmError::DataMissing(_) | MrmError::RowOutOfRange { .. } => {
            ToolError::recoverable(e.to_string())
        }
        other => ToolError::fatal(other.to_string()),
    }
}

fn save(ctx: &ToolContext, name: &str, value: &impl Serialize) -> Result<(), ToolError> {
    crate::modeling::write_json(&ctx.resolve(name), value).map_err(|e| ToolError::fatal(e.to_string()))
}

fn json_in<T: serde::de::DeserializeOwned>(ctx: &ToolContext, path: &str) -> Result<T, ToolError> {
    read_json(&ctx.resolve(path)).map_err(ToolError::recoverable)
}

pub struct ComplianceTool;

impl Tool for ComplianceTool {
    fn id(&self) -> &str {
        "compliance_check"
    }
    fn name(&self) -> &str {
        "Documentation Compliance Tool"
    }
    fn description(&self) -> &str {
        "Retrieves the modeling guide passages for each pipeline stage and checks the documentation covers them."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![("documentation_path", "modeling documentation"), ("guide_path", "organizational modeling guide")]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let doc = ctx.resolve(str_field(input, "documentation_path")?);
        let guide = ctx.resolve(str_field(input, "guide_path")?);
        let report = check_compliance(&doc, &guide, None).map_err(mrm_err)?;
        save(ctx, files::COMPLIANCE, &report)?;
        let mut s = format!("## Documentation Compliance\n\nVerdict: {}\n\n", report.verdict.id());
        for st in &report.stages {
            s.push_str(&format!("- {}: {}\n", st.stage, if st.pass { "pass" } else { "fail" }));
        }
        s.push_str(&format!("\n{}\n", report.narrative));
        Ok(ToolOutput::text(s).with_artifact("compliance", files::COMPLIANCE))
    }
}

pub struct ReplicationTool;

impl Tool for ReplicationTool {
    fn id(&self) -> &str {
        "model_replication"
    }
    fn name(&self) -> &str {
        "Model Replication Tool"
    }
    fn description(&self) -> &str {
        "Refits the model from the transformed training data with the documented family, hyperparameters and \
         seed, and compares test metrics with the modeling team's."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("train_path", "transformed train CSV"),
            ("test_path", "transformed test CSV"),
            ("model_path", "modeling team's model"),
            ("metrics_path", "modeling team's metrics"),
            ("target", "target column"),
            ("tolerance", "largest accepted metric difference"),
        ]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let target = str_field(input, "target")?;
        let model_path = ctx.resolve(str_field(input, "model_path")?);
        let reference: MetricsReport = json_in(ctx, str_field(input, "metrics_path")?)?;
        let est = load_model(&model_path).map_err(|e| mrm_err(e.into()))?;
        let tolerance = opt_f64(input, "tolerance")?.unwrap_or(SAME_ENGINE_TOLERANCE);
        let report = replicate_model(
            &ctx.resolve(str_field(input, "train_path")?),
            &ctx.resolve(str_field(input, "test_path")?),
            target,
            est.family,
            &est.hyperparams,
            &reference,
            est.seed,
            tolerance,
        )
        .map_err(mrm_err)?;
        save(ctx, files::REPLICATION, &report)?;
        let mut s = format!(
            "## Model Replication\n\nReplicated {} {} (seed {}). Verdict: {}\n\n",
            report.family.label(),
            report.hyperparams,
            report.seed,
            report.verdict.id()
        );
        for (k, v) in &report.replicated {
            s.push_str(&format!("- {k}: {v} (delta {})\n", report.deltas[k]));
        }
        Ok(ToolOutput::text(s).with_artifact("replication", files::REPLICATION))
    }
}

pub struct SoundnessTool;

impl Tool for SoundnessTool {
    fn id(&self) -> &str {
        "conceptual_soundness"
    }
    fn name(&self) -> &str {
        "Conceptual Soundness Tool"
    }
    fn description(&self) -> &str {
        "Computes feature importance with the method suited to the model family and checks benchmarks, \
         plausible drivers and interpretability."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("model_path", "trained model"),
            ("test_path", "transformed test CSV"),
            ("target", "target column"),
            ("guide_path", "modeling guide with benchmarks"),
            ("plausible_features", "features expected among the main drivers"),
            ("method", "importance method (optional)"),
        ]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let target = str_field(input, "target")?;
        let guide_path = ctx.resolve(str_field(input, "guide_path")?);
        let guide =
            std::fs::read_to_string(&guide_path).map_err(|_| mrm_err(MrmError::FileMissing(guide_path.clone())))?;
        let method = match opt_str(input, "method") {
            Some(m) => Some(
                ImportanceMethod::parse(m)
                    .ok_or_else(|| ToolError::recoverable(format!("unknown importance method '{m}'")))?,
            ),
            None => None,
        };
        let report = assess_soundness(
            &ctx.resolve(str_field(input, "model_path")?),
            &ctx.resolve(str_field(input, "test_path")?),
            target,
            &guide,
            &str_list(input, "plausible_features")?,
            method,
            ctx.seed,
        )
        .map_err(mrm_err)?;
        save(ctx, files::SOUNDNESS, &report)?;
        let mut s = format!(
            "## Conceptual Soundness\n\nVerdict: {}\n\nFeature importance ({}):\n",
            report.verdict.id(),
            report.importance.method
        );
        for (name, v) in &report.top_features {
            s.push_str(&format!("- {name}: {v:.6}\n"));
        }
        for c in &report.checklist {
            s.push_str(&format!("- check {}: {}\n", c.name, if c.passed { "pass" } else { "fail" }));
        }
        Ok(ToolOutput::text(s).with_artifact("soundness", files::SOUNDNESS))
    }
}

pub struct OutcomeTool;

impl Tool for OutcomeTool {
    fn id(&self) -> &str {
        "outcome_analysis"
    }
    fn name(&self) -> &str {
        "Outcome Analysis Tool"
    }
    fn description(&self) -> &str {
        "Evaluates the model on the test data, on shifted numeric inputs and with outlier rows. \
         Categorical variables are excluded from the perturbations."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("model_path", "trained model"),
            ("test_path", "transformed test CSV"),
            ("target", "target column"),
            ("data_path", "raw modeling data, used to tell numeric from categorical columns"),
            ("fe_report_path", "feature engineering report listing encoded columns"),
            ("mode", "add-fixed, add-random or multiply-fixed"),
            ("magnitude", "shift size c"),
            ("outlier_rows", "row indices to push out of range"),
            ("outlier_magnitude", "amount added to outlier rows"),
            ("sensitivity_threshold", "metric drop reported as sensitivity"),
        ]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let target = str_field(input, "target")?;
        let test_path = ctx.resolve(str_field(input, "test_path")?);
        let defaults = OutcomeConfig::default();
        let mode = match opt_str(input, "mode") {
            Some(m) => PerturbMode::parse(m).ok_or_else(|| ToolError::recoverable(format!("unknown mode '{m}'")))?,
            None => defaults.mode,
        };
        let outlier_rows = match input.get("outlier_rows") {
            None | Some(Value::Null) => defaults.outlier_rows.clone(),
            Some(v) => serde_json::from_value::<Vec<usize>>(v.clone())
                .map_err(|_| ToolError::recoverable("outlier_rows must list row indices"))?,
        };
        let config = OutcomeConfig {
            mode,
            magnitude: opt_f64(input, "magnitude")?.unwrap_or(defaults.magnitude),
            outlier_rows,
            outlier_magnitude: opt_f64(input, "outlier_magnitude")?.unwrap_or(defaults.outlier_magnitude),
            sensitivity_threshold: opt_f64(input, "sensitivity_threshold")?.unwrap_or(defaults.sensitivity_threshold),
        };
        let encoded = match opt_str(input, "fe_report_path") {
            Some(p) => json_in::<FeReport>(ctx, p)?.encoded_columns,
            None => Vec::new(),
        };
        let reference = match opt_str(input, "data_path") {
            Some(p) => Some(load_csv(ctx.resolve(p)).map_err(|e| mrm_err(e.into()))?),
            None => None,
        };
        let test = load_csv(&test_path).map_err(|e| mrm_err(e.into()))?;
        let numeric = numeric_feature_columns(&test, reference.as_ref(), target, &encoded).map_err(mrm_err)?;
        let report = analyze_outcomes(
            &ctx.resolve(str_field(input, "model_path")?),
            &test_path,
            target,
            &numeric,
            &config,
            ctx.seed,
        )
        .map_err(mrm_err)?;
        save(ctx, files::OUTCOME, &report)?;
        let obj = serde_json::json!({
            "shifted_inputs": report.shifted_inputs,
            "adversarial_outlier_inputs": report.adversarial_outlier_inputs,
        });
        let s = format!(
            "## Outcome Analysis\n\n{}\n\nresult = {}\n",
            report.narrative,
            serde_json::to_string_pretty(&obj).expect("metrics serialize")
        );
        Ok(ToolOutput::text(s).with_artifact("outcome", files::OUTCOME))
    }
}

pub struct MrmReportTool;

fn sub<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Option<T> {
    read_json(&dir.join(name)).ok()
}

impl Tool for MrmReportTool {
    fn id(&self) -> &str {
        "write_mrm_report"
    }
    fn name(&self) -> &str {
        "MRM Report Writer Tool"
    }
    fn description(&self) -> &str {
        "Assembles the compliance, replication, soundness and outcome results into the validation report."
    }
    fn fields(&self) -> Vec<(&'static str, &'static str)> {
        vec![("output", "report text file")]
    }
    fn call(&self, input: &Map<String, Value>, ctx: &ToolContext) -> ToolResult {
        let output = opt_str(input, "output").unwrap_or(files::REPORT);
        let dir = ctx.workdir;
        let c: Option<ComplianceReport> = sub(dir, files::COMPLIANCE);
        let r: Option<ReplicationReport> = sub(dir, files::REPLICATION);
        let s: Option<SoundnessReport> = sub(dir, files::SOUNDNESS);
        let o: Option<OutcomeReport> = sub(dir, files::OUTCOME);
        let text = render_mrm_report(c.as_ref(), r.as_ref(), s.as_ref(), o.as_ref()).map_err(mrm_err)?;
        let result = MrmResult::new(c.as_ref().unwrap(), r.as_ref().unwrap(), s.as_ref().unwrap(), o.as_ref().unwrap());
        std::fs::write(ctx.resolve(output), &text).map_err(|e| ToolError::fatal(e.to_string()))?;
        save(ctx, files::RESULT, &result)?;
        Ok(ToolOutput::text(text).with_artifact("mrm report", output).with_artifact("mrm result", files::RESULT))
    }
}
