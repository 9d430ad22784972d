use serde_json::json;

use super::tools::{ComplianceTool, MrmReportTool, OutcomeTool, ReplicationTool, SoundnessTool};
use super::{files, MrmConfig};
use crate::modeling::{self, Recipe};
use crate::orchestration::{AgentSpec, CrewSpec, Inputs, Process, TaskSpec, ToolCatalog};

pub mod roles {
    pub const MANAGER: &str = "Manager - Model Risk Management";
    pub const COMPLIANCE: &str = "Senior Data Scientist - Documentation Compliance Check";
    pub const REPLICATION: &str = "Senior Machine Learning Engineer - Model Replication";
    pub const SOUNDNESS: &str = "Senior Model Validation Analyst - Conceptual Soundness";
    pub const OUTCOME: &str = "Senior Model Validation Analyst - Outcome Analyzer";
    pub const WRITER: &str = "Documentation Writer";
}

pub fn mrm_task_ids() -> [&'static str; 5] {
    ["documentation_compliance", "model_replication", "conceptual_soundness", "outcome_analysis", "mrm_report"]
}

pub fn mrm_catalog() -> ToolCatalog {
    let mut c = ToolCatalog::new();
    c.register(ComplianceTool)
        .register(ReplicationTool)
        .register(SoundnessTool)
        .register(OutcomeTool)
        .register(MrmReportTool);
    c
}

/// Placeholder values; `model_prefix` leads from the MRM directory to the
/// modeling run directory (e.g. `../`).
pub fn mrm_inputs(recipe: &Recipe, model_prefix: &str) -> Inputs {
    let mut m = Inputs::new();
    let model = |f: &str| format!("{model_prefix}{f}");
    for (k, v) in [
        ("doc_path", model(modeling::files::DOCUMENTATION)),
        ("data_path", model(modeling::files::DATA)),
        ("train2_path", model(modeling::files::TRAIN2)),
        ("test2_path", model(modeling::files::TEST2)),
        ("model_path", model(modeling::files::MODEL)),
        ("metrics_path", model(modeling::files::METRICS)),
        ("fe_report_path", model(modeling::files::FE_REPORT)),
        ("guide_path", files::GUIDE.to_string()),
        ("report_path", files::REPORT.to_string()),
        ("target", recipe.target.clone()),
    ] {
        m.insert(k.to_string(), v);
    }
    m
}

fn agent(role: &str, goal: &str, backstory: &str, tool: &str) -> AgentSpec {
    AgentSpec::new(role, goal, backstory).with_tools(&[tool])
}

pub fn build_mrm_crew(recipe: &Recipe, config: &MrmConfig) -> CrewSpec {
    let agents = vec![
        agent(
            roles::COMPLIANCE,
            "Verify that the modeling documentation follows the organizational modeling guide.",
            "You review model documentation against internal standards, citing the guide for every finding.",
            "compliance_check",
        ),
        agent(
            roles::REPLICATION,
            "Independently rebuild the model and confirm its reported performance.",
            "You never trust reported numbers until you have reproduced them in your own environment.",
            "model_replication",
        ),
        agent(
            roles::SOUNDNESS,
            "Judge whether the model's drivers and performance make business sense.",
            "You validate business cases, performance benchmarks and interpretability of credit models.",
            "conceptual_soundness",
        ),
        agent(
            roles::OUTCOME,
            "Test how the model behaves when its inputs shift or contain outliers.",
            "You stress-test models with perturbed data before they reach production.",
            "outcome_analysis",
        ),
        agent(
            roles::WRITER,
            "Write the model validation report.",
            "You document validation findings for model owners and regulators.",
            "write_mrm_report",
        ),
    ];
    let manager = AgentSpec::new(
        roles::MANAGER,
        "Complete an independent validation of the model by assigning each review to the right validator.",
        "You lead the model risk management team. You delegate every task to the coworker best suited for it.",
    )
    .delegating();

    let [comp, repl, sound, outc, report] = mrm_task_ids();
    let o = &config.outcome;
    let tasks = vec![
        TaskSpec::new(
            comp,
            "Check the modeling documentation '{doc_path}' against the organizational modeling guide \
             '{guide_path}'. For every pipeline stage, retrieve the relevant guide requirements and verify \
             the documentation covers them.",
            "A per-stage compliance verdict and an overall verdict.",
        )
        .assigned(roles::COMPLIANCE)
        .hint("compliance_check", json!({"documentation_path": "{doc_path}", "guide_path": "{guide_path}"})),
        TaskSpec::new(
            repl,
            "Replicate the model saved at '{model_path}': retrain it on '{train2_path}' with the same family, \
             hyperparameters and seed, evaluate it on '{test2_path}' and compare with '{metrics_path}'.",
            "The replicated metrics, their differences from the modeling team's, and a verdict.",
        )
        .assigned(roles::REPLICATION)
        .after(&[comp])
        .hint(
            "model_replication",
            json!({
                "train_path": "{train2_path}",
                "test_path": "{test2_path}",
                "model_path": "{model_path}",
                "metrics_path": "{metrics_path}",
                "target": "{target}",
                "tolerance": config.tolerance,
            }),
        ),
        TaskSpec::new(
            sound,
            "Show the feature importance and explainability of the trained model '{model_path}' on \
             '{test2_path}', and check it against the benchmarks in '{guide_path}'.",
            "The top features with their importance, the checklist results and a verdict.",
        )
        .assigned(roles::SOUNDNESS)
        .after(&[repl])
        .hint(
            "conceptual_soundness",
            json!({
                "model_path": "{model_path}",
                "test_path": "{test2_path}",
                "target": "{target}",
                "guide_path": "{guide_path}",
                "plausible_features": recipe.plausible_features,
            }),
        ),
        TaskSpec::new(
            outc,
            "Test the model '{model_path}' on '{test2_path}' with significant shifts in the numeric input \
             distributions and with an outlier row. Exclude the categorical variables from this process.",
            "Metrics for the shifted and outlier inputs compared with the baseline.",
        )
        .assigned(roles::OUTCOME)
        .after(&[sound])
        .hint(
            "outcome_analysis",
            json!({
                "model_path": "{model_path}",
                "test_path": "{test2_path}",
                "target": "{target}",
                "data_path": "{data_path}",
                "fe_report_path": "{fe_report_path}",
                "mode": o.mode.id(),
                "magnitude": o.magnitude,
                "outlier_rows": o.outlier_rows,
                "outlier_magnitude": o.outlier_magnitude,
                "sensitivity_threshold": o.sensitivity_threshold,
            }),
        ),
        TaskSpec::new(
            report,
            "Write the model validation report covering documentation compliance, model replication, \
             conceptual soundness and outcome analysis. Save it to '{report_path}'.",
            "The complete validation report with an overall verdict.",
        )
        .assigned(roles::WRITER)
        .after(&[comp, repl, sound, outc])
        .hint("write_mrm_report", json!({"output": "{report_path}"})),
    ];
    CrewSpec {
        name: format!("{}-mrm", recipe.name.id()),
        agents,
        tasks,
        process: Process::Hierarchical,
        manager: Some(manager),
    }
}
