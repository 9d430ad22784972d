use std::sync::Arc;

use serde_json::{json, Value};

use super::tools::{
    grid_to_json, DocumentationTool, EdaTool, EvaluationTool, FeatureEngineeringTool, ModelSelectionTool, TrainingTool,
    TuningTool,
};
use super::{files, Recipe, Result, Strategy};
use crate::orchestration::{AgentSpec, CrewSpec, Inputs, Process, TaskSpec, ToolCatalog};

pub mod roles {
    pub const MANAGER: &str = "Data Science Manager";
    pub const EDA: &str = "Senior Data Scientist I";
    pub const FE: &str = "Senior Data Scientist II";
    pub const SELECTION: &str = "Machine Learning Engineer I";
    pub const TUNING: &str = "Senior Machine Learning Engineer I";
    pub const TRAINING: &str = "Senior Machine Learning Engineer II";
    pub const EVALUATION: &str = "Senior Machine Learning Engineer III";
    pub const WRITER: &str = "Documentation Writer";
}

/// Task ids in pipeline order; the first six match [`super::STAGES`].
pub fn task_ids() -> [&'static str; 7] {
    [
        "exploratory_data_analysis",
        "feature_engineering",
        "model_selection",
        "hyperparameter_tuning",
        "model_training",
        "model_evaluation",
        "documentation",
    ]
}

pub fn modeling_catalog(recipe: &Recipe) -> ToolCatalog {
    let mut c = ToolCatalog::new();
    c.register(EdaTool)
        .register(FeatureEngineeringTool)
        .register(ModelSelectionTool)
        .register(TuningTool)
        .register(TrainingTool)
        .register(EvaluationTool)
        .register(DocumentationTool { recipe: Arc::new(recipe.clone()) });
    c
}

/// Placeholder values for the task templates. Paths are relative to the run
/// directory so prompts do not depend on where it lives.
pub fn modeling_inputs(recipe: &Recipe) -> Inputs {
    let mut m = Inputs::new();
    for (k, v) in [
        ("data_path", files::DATA),
        ("train_path", files::TRAIN),
        ("test_path", files::TEST),
        ("train2_path", files::TRAIN2),
        ("test2_path", files::TEST2),
        ("model_path", files::MODEL),
        ("hyperparams_path", files::HYPERPARAMS),
        ("doc_path", files::DOCUMENTATION),
    ] {
        m.insert(k.to_string(), v.to_string());
    }
    m.insert("target".into(), recipe.target.clone());
    m.insert("folds".into(), recipe.folds.to_string());
    m
}

fn agent(role: &str, goal: &str, backstory: &str, tool: &str) -> AgentSpec {
    AgentSpec::new(role, goal, backstory).with_tools(&[tool])
}

fn agents() -> Vec<AgentSpec> {
    vec![
        agent(
            roles::EDA,
            "Understand the data: distributions, missing values, correlations and class balance.",
            "You have years of experience profiling tabular credit data before any model is built.",
            "eda",
        ),
        agent(
            roles::FE,
            "Turn raw tables into clean, encoded, balanced modeling data without leaking test information.",
            "You are careful about fitting every transformation on training data only.",
            "feature_engineering",
        ),
        agent(
            roles::SELECTION,
            "Pick the model family that generalizes best under cross validation.",
            "You compare candidate algorithms on equal footing before committing to one.",
            "model_selection",
        ),
        agent(
            roles::TUNING,
            "Find the hyperparameters that maximize cross-validated accuracy.",
            "You run systematic grid searches and keep the results reproducible.",
            "hyperparameter_tuning",
        ),
        agent(
            roles::TRAINING,
            "Train the final model and save it for evaluation and review.",
            "You own the training pipeline and the model artifacts.",
            "model_training",
        ),
        agent(
            roles::EVALUATION,
            "Measure the trained model on held-out data.",
            "You report metrics exactly as computed, with no rounding of the record.",
            "model_evaluation",
        ),
        agent(
            roles::WRITER,
            "Write clear technical documentation of the whole modeling process.",
            "You document models for validators and regulators.",
            "write_documentation",
        ),
    ]
}

fn manager() -> AgentSpec {
    AgentSpec::new(
        roles::MANAGER,
        "Deliver a validated credit risk model by assigning every task to the right team member.",
        "You lead a team of data scientists and machine learning engineers. You do not do the work \
         yourself; you delegate each task to the coworker best suited for it and check the result.",
    )
    .delegating()
}

fn fe_description(recipe: &Recipe) -> String {
    let mut steps = Vec::new();
    if !recipe.drop_columns.is_empty() {
        let cols: Vec<String> = recipe.drop_columns.iter().map(|c| format!("'{c}'")).collect();
        steps.push(format!("Drop the column(s) {} from both the train and test datasets.", cols.join(", ")));
    }
    steps.push("Apply label encoding to the categorical features: fit on train, transform test.".into());
    steps.push("Impute missing values with K-Nearest Neighbors fitted on train, then transform test.".into());
    steps.push(format!(
        "Check the proportions of each class in '{{target}}'. If any class reaches {:.0}%, rebalance.",
        recipe.imbalance_threshold * 100.0
    ));
    let method = match recipe.strategy {
        Strategy::Smote => "SMOTE (Synthetic Minority Over-sampling Technique)",
        Strategy::Downsample => "random downsampling of the majority class",
    };
    let scope = if recipe.resample_test { "the train and test datasets separately" } else { "the train dataset only" };
    steps.push(format!("Rebalance {scope} with {method}."));
    steps.push("Save the transformed data as '{train2_path}' and '{test2_path}'.".into());
    let numbered: Vec<String> = steps.iter().enumerate().map(|(i, s)| format!("{}. {s}", i + 1)).collect();
    format!(
        "Perform feature engineering on the training data '{{train_path}}' and the test data '{{test_path}}'. \
         The target is '{{target}}'. Steps:\n{}",
        numbered.join("\n")
    )
}

fn grids_json(recipe: &Recipe) -> Value {
    let mut m = serde_json::Map::new();
    for f in &recipe.candidates {
        m.insert(f.id().to_string(), grid_to_json(&recipe.grid_for(*f)));
    }
    Value::Object(m)
}

fn tasks(recipe: &Recipe) -> Vec<TaskSpec> {
    let [eda, fe, sel, tune, train, eval, doc] = task_ids();
    let candidates: Vec<&str> = recipe.candidates.iter().map(|f| f.id()).collect();
    vec![
        TaskSpec::new(
            eda,
            "Conduct exploratory data analysis on '{data_path}' with target '{target}'. Report the shape, \
             missing values, feature types, summary statistics, correlations, skewness, outliers and the \
             class balance of the target.",
            "A report covering the shape, missing values, feature types, statistics, correlations and class balance.",
        )
        .assigned(roles::EDA)
        .hint("eda", json!({"csv_path": "{data_path}", "target": "{target}"})),
        TaskSpec::new(
            fe,
            &fe_description(recipe),
            "A numbered list of every transformation applied and the paths of the transformed datasets.",
        )
        .assigned(roles::FE)
        .after(&[eda])
        .hint(
            "feature_engineering",
            json!({
                "train_path": "{train_path}",
                "test_path": "{test_path}",
                "target": "{target}",
                "drop": recipe.drop_columns,
                "strategy": recipe.strategy.id(),
                "imbalance_threshold": recipe.imbalance_threshold,
                "resample_test": recipe.resample_test,
                "impute_k": recipe.impute_k,
                "smote_k": recipe.smote_k,
                "train_output": "{train2_path}",
                "test_output": "{test2_path}",
            }),
        ),
        TaskSpec::new(
            sel,
            "Select the best machine learning model for '{train2_path}' with target '{target}' using \
             {folds}-fold cross validation.",
            "## Model Selection Report with the best model and the rationale for choosing it.",
        )
        .assigned(roles::SELECTION)
        .after(&[fe])
        .hint(
            "model_selection",
            json!({"train_path": "{train2_path}", "target": "{target}", "candidates": candidates, "folds": recipe.folds}),
        ),
        TaskSpec::new(
            tune,
            "Tune the hyperparameters of the selected model on '{train2_path}' with {folds}-fold cross \
             validation and save the best set to '{hyperparams_path}'.",
            "The best hyperparameters with their values.",
        )
        .assigned(roles::TUNING)
        .after(&[sel])
        .hint(
            "hyperparameter_tuning",
            json!({
                "train_path": "{train2_path}",
                "target": "{target}",
                "grids": grids_json(recipe),
                "folds": recipe.folds,
                "output": "{hyperparams_path}",
            }),
        ),
        TaskSpec::new(
            train,
            "Train the selected model on '{train2_path}' with the hyperparameters in '{hyperparams_path}' \
             and save it to '{model_path}'.",
            "A training conclusion and the location of the saved model.",
        )
        .assigned(roles::TRAINING)
        .after(&[tune])
        .hint(
            "model_training",
            json!({
                "train_path": "{train2_path}",
                "target": "{target}",
                "hyperparams_path": "{hyperparams_path}",
                "model_path": "{model_path}",
            }),
        ),
        TaskSpec::new(
            eval,
            "Evaluate the model saved at '{model_path}' on the test data '{test2_path}'. Report accuracy, \
             F1-score, recall, precision and AUC.",
            "The evaluation metrics of the model on the test data.",
        )
        .assigned(roles::EVALUATION)
        .after(&[train])
        .hint("model_evaluation", json!({"model_path": "{model_path}", "test_path": "{test2_path}", "target": "{target}"})),
        TaskSpec::new(
            doc,
            "Write the technical documentation of the whole modeling process, one section per stage: \
             exploratory data analysis, feature engineering, model selection, hyperparameter tuning, model \
             training and model evaluation. Save it to '{doc_path}'.",
            "The complete technical documentation.",
        )
        .assigned(roles::WRITER)
        .after(&[eda, fe, sel, tune, train, eval])
        .hint("write_documentation", json!({"output": "{doc_path}"})),
    ]
}

pub fn build_modeling_crew(recipe: &Recipe) -> Result<CrewSpec> {
    recipe.validate()?;
    Ok(CrewSpec {
        name: format!("{}-modeling", recipe.name.id()),
        agents: agents(),
        tasks: tasks(recipe),
        process: Process::Hierarchical,
        manager: Some(manager()),
    })
}
