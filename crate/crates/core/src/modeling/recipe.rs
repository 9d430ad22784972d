use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ModelingError, Result};
use crate::model_lab::{Family, Grid};
use crate::synth::{informative_features, SynthParams, SYNTH_TARGET};
use crate::tabular::{dedupe, load_csv, map_target_status, merge_on_key, Column, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipeName {
    Fraud,
    Card,
    Credit,
    Synthetic,
}

impl RecipeName {
    pub fn id(self) -> &'static str {
        match self {
            RecipeName::Fraud => "fraud",
            RecipeName::Card => "card",
            RecipeName::Credit => "credit",
            RecipeName::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Option<RecipeName> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fraud" => Some(RecipeName::Fraud),
            "card" => Some(RecipeName::Card),
            "credit" => Some(RecipeName::Credit),
            "synthetic" | "synth" => Some(RecipeName::Synthetic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Downsample,
    Smote,
}

impl Strategy {
    pub fn id(self) -> &'static str {
        match self {
            Strategy::Downsample => "downsample",
            Strategy::Smote => "smote",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        match s.trim().to_ascii_lowercase().as_str() {
            "downsample" => Some(Strategy::Downsample),
            "smote" => Some(Strategy::Smote),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetTransform {
    /// Monthly STATUS symbols to a default flag, worst month per account.
    StatusToBinary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub name: RecipeName,
    /// Credit and fraud: one CSV. Card: application then credit records.
    /// Synthetic: none.
    pub inputs: Vec<PathBuf>,
    pub target: String,
    pub target_transform: Option<TargetTransform>,
    pub drop_columns: Vec<String>,
    pub strategy: Strategy,
    pub resample_test: bool,
    /// Resample when any class share reaches this.
    pub imbalance_threshold: f64,
    pub candidates: Vec<Family>,
    /// Tuning grids by family; families without one use the default grid.
    pub grids: BTreeMap<Family, Grid>,
    pub output_dir: PathBuf,
    pub split_ratio: f64,
    pub folds: usize,
    pub impute_k: usize,
    pub smote_k: usize,
    /// Features a reviewer expects near the top of the importance ranking.
    pub plausible_features: Vec<String>,
    pub synth: Option<SynthParams>,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Recipe {
    fn base(name: RecipeName, inputs: Vec<PathBuf>, target: &str, output_dir: &Path) -> Recipe {
        Recipe {
            name,
            inputs,
            target: target.to_string(),
            target_transform: None,
            drop_columns: Vec::new(),
            strategy: Strategy::Smote,
            resample_test: true,
            imbalance_threshold: 0.6,
            candidates: Family::ALL.to_vec(),
            grids: BTreeMap::new(),
            output_dir: output_dir.to_path_buf(),
            split_ratio: 0.8,
            folds: 5,
            impute_k: 5,
            smote_k: 5,
            plausible_features: Vec::new(),
            synth: None,
        }
    }

    pub fn credit(data_dir: &Path, output_dir: &Path) -> Recipe {
        let mut r = Self::base(
            RecipeName::Credit,
            vec![data_dir.join("credit").join("credit_risk_dataset.csv")],
            "loan_status",
            output_dir,
        );
        r.drop_columns = strings(&["person_age"]);
        r.plausible_features = strings(&[
            "loan_grade",
            "loan_percent_income",
            "cb_person_default_on_file",
            "person_home_ownership",
            "loan_intent",
            "person_income",
            "loan_int_rate",
        ]);
        r
    }

    /// Downsampling with logistic regression; `Strategy::Smote` gives the
    /// oversampling variant.
    pub fn fraud(data_dir: &Path, output_dir: &Path, strategy: Strategy) -> Recipe {
        let mut r =
            Self::base(RecipeName::Fraud, vec![data_dir.join("fraud_dir").join("fraud.csv")], "Class", output_dir);
        r.strategy = strategy;
        r.candidates = vec![Family::LogisticRegression];
        r.plausible_features = strings(&["V4", "V10", "V12", "V14", "V17", "Amount"]);
        r
    }

    pub fn card(data_dir: &Path, output_dir: &Path) -> Recipe {
        let dir = data_dir.join("card");
        let mut r = Self::base(
            RecipeName::Card,
            vec![dir.join("application_record.csv"), dir.join("credit_record.csv")],
            "STATUS",
            output_dir,
        );
        r.target_transform = Some(TargetTransform::StatusToBinary);
        r.drop_columns = strings(&["ID"]);
        r.candidates = vec![Family::LogisticRegression, Family::RandomForest];
        r.plausible_features = strings(&[
            "ACCOUNT_AGE",
            "AMT_INCOME_TOTAL",
            "DAYS_BIRTH",
            "DAYS_EMPLOYED",
            "NAME_INCOME_TYPE",
            "OCCUPATION_TYPE",
        ]);
        r
    }

    pub fn synthetic(params: SynthParams, output_dir: &Path) -> Recipe {
        let mut r = Self::base(RecipeName::Synthetic, Vec::new(), SYNTH_TARGET, output_dir);
        r.plausible_features = informative_features(params.n_numeric, params.seed);
        r.synth = Some(params);
        r
    }

    /// Named recipe reading from `data_dir` (ignored for synthetic).
    pub fn named(name: RecipeName, data_dir: &Path, output_dir: &Path) -> Recipe {
        match name {
            RecipeName::Credit => Self::credit(data_dir, output_dir),
            RecipeName::Fraud => Self::fraud(data_dir, output_dir, Strategy::Downsample),
            RecipeName::Card => Self::card(data_dir, output_dir),
            RecipeName::Synthetic => Self::synthetic(SynthParams::default(), output_dir),
        }
    }

    pub fn grid_for(&self, family: Family) -> Grid {
        self.grids.get(&family).cloned().unwrap_or_else(|| crate::model_lab::default_grid(family))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(ModelingError::InvalidRecipe(why.to_string()));
        if self.target.trim().is_empty() {
            return bad("target name is empty");
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output directory is empty");
        }
        let wanted = match self.name {
            RecipeName::Synthetic => 0,
            RecipeName::Card => 2,
            RecipeName::Credit | RecipeName::Fraud => 1,
        };
        if self.inputs.len() != wanted || self.inputs.iter().any(|p| p.as_os_str().is_empty()) {
            return bad(&format!("{} recipe needs {wanted} input path(s)", self.name.id()));
        }
        if self.name == RecipeName::Synthetic && self.synth.is_none() {
            return bad("synthetic recipe needs generator parameters");
        }
        if self.candidates.is_empty() {
            return bad("no candidate model families");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split ratio must lie in (0, 1)");
        }
        if !(self.imbalance_threshold > 0.5 && self.imbalance_threshold <= 1.0) {
            return bad("imbalance threshold must lie in (0.5, 1]");
        }
        if self.folds < 2 || self.impute_k == 0 || self.smote_k == 0 {
            return bad("folds must be >= 2 and neighbour counts >= 1");
        }
        if self.drop_columns.iter().any(|c| c == &self.target) {
            return bad("cannot drop the target");
        }
        Ok(())
    }

    /// Loads (or generates) the full modeling table.
    pub fn prepare_data(&self) -> Result<Table> {
        for p in &self.inputs {
            if !p.is_file() {
                return Err(ModelingError::DataMissing(p.clone()));
            }
        }
        let table = match self.name {
            RecipeName::Synthetic => self.synth.as_ref().expect("validated").generate()?,
            RecipeName::Card => {
                let apps = load_csv(&self.inputs[0])?;
                let records = load_csv(&self.inputs[1])?;
                let per_account = summarize_credit_records(&records, &self.target)?;
                dedupe(&merge_on_key(&apps, &per_account, "ID")?)
            }
            RecipeName::Credit | RecipeName::Fraud => load_csv(&self.inputs[0])?,
        };
        if table.column_index(&self.target).is_none() {
            return Err(crate::tabular::TabularError::UnknownTarget(self.target.clone()).into());
        }
        Ok(table)
    }
}

/// One row per account: `ACCOUNT_AGE = |min MONTHS_BALANCE|` and the target
/// set when any month is in default. Accounts keep first-appearance order.
pub fn summarize_credit_records(records: &Table, target: &str) -> Result<Table> {
    let flagged = map_target_status(records, target)?;
    let ids = flagged.column("ID").ok_or_else(|| crate::tabular::TabularError::KeyMissing("ID".into()))?;
    let months = flagged.numeric("MONTHS_BALANCE")?;
    let status = flagged.numeric(target)?;
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, (crate::tabular::Value, f64, f64)> = BTreeMap::new();
    for r in 0..flagged.n_rows() {
        let id = ids.get(r);
        let key = id.key();
        let entry = acc.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            (id.clone(), f64::INFINITY, 0.0)
        });
        entry.1 = entry.1.min(months[r]);
        entry.2 = entry.2.max(status[r]);
    }
    let rows: Vec<Vec<crate::tabular::Value>> = order
        .iter()
        .map(|k| {
            let (id, min_month, bad) = &acc[k];
            vec![id.clone(), crate::tabular::Value::Num(min_month.abs()), crate::tabular::Value::Num(*bad)]
        })
        .collect();
    let t = Table::from_rows(strings(&["ID", "ACCOUNT_AGE", target]), &rows)?;
    debug_assert!(matches!(t.column(target), Some(Column::Numeric(_))));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Value;

    #[test]
    fn credit_records_collapse_per_account() {
        let rows = vec![
            vec![Value::Num(1.0), Value::Num(0.0), Value::Text("C".into())],
            vec![Value::Num(1.0), Value::Num(-7.0), Value::Text("2".into())],
            vec![Value::Num(2.0), Value::Num(-3.0), Value::Text("X".into())],
        ];
        let t = Table::from_rows(strings(&["ID", "MONTHS_BALANCE", "STATUS"]), &rows).unwrap();
        let s = summarize_credit_records(&t, "STATUS").unwrap();
        assert_eq!(s.shape(), (2, 3));
        assert_eq!(s.numeric("ACCOUNT_AGE").unwrap(), &[7.0, 3.0]);
        assert_eq!(s.numeric("STATUS").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn validation() {
        let out = Path::new("out");
        assert!(Recipe::credit(Path::new("d"), out).validate().is_ok());
        let mut r = Recipe::credit(Path::new("d"), out);
        r.inputs.clear();
        assert!(matches!(r.validate(), Err(ModelingError::InvalidRecipe(_))));
        let mut r = Recipe::synthetic(SynthParams::default(), out);
        r.candidates.clear();
        assert!(matches!(r.validate(), Err(ModelingError::InvalidRecipe(_))));
    }

    #[test]
    fn missing_csv_is_data_missing() {
        let r = Recipe::credit(Path::new("/nonexistent"), Path::new("out"));
        assert!(matches!(r.prepare_data(), Err(ModelingError::DataMissing(_))));
    }
}
