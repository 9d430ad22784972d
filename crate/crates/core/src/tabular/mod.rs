//! In-memory tables and the deterministic data preparation steps run by the
//! EDA and feature-engineering agents.
//!
//! Tables are immutable once built; every operation returns a new table.
//! Storage is columnar: a column is either numeric (`NaN` marks a missing
//! cell) or text (`None` marks a missing cell).

mod csv_io;
mod encode;
mod impute;
mod join;
mod resample;
mod schema;
mod split;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use csv_io::{load_csv, write_csv};
pub use encode::{apply_label_encoders, fit_label_encoders, EncoderState};
pub use impute::{knn_impute, ImputerState};
pub use join::{dedupe, map_target_status, merge_on_key};
pub use resample::{class_proportions, random_downsample, smote};
pub use schema::{infer_schema, ColumnKind, ColumnSchema, NumericStats, FLAG_MAX_CARDINALITY};
pub use split::train_test_split;

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("file not found: {0}")]
    FileMissing(PathBuf),
    #[error("file is empty: {0}")]
    EmptyFile(PathBuf),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
    #[error("unknown target column '{0}'")]
    UnknownTarget(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("key column '{0}' missing from one side of the join")]
    KeyMissing(String),
    #[error("unknown STATUS symbol '{0}'")]
    UnknownStatusSymbol(String),
    #[error("need at least {needed} complete rows for imputation, found {found}")]
    TooFewCompleteRows { needed: usize, found: usize },
    #[error("minority class has {0} rows; SMOTE needs at least 2")]
    MinorityTooSmall(usize),
    #[error("target '{0}' has a single class")]
    SingleClass(String),
    #[error("target '{target}' has {found} classes; exactly 2 are required")]
    NotBinary { target: String, found: usize },
    #[error("column '{0}' is not numeric")]
    NonNumericColumn(String),
    #[error("column '{0}' has missing values")]
    MissingValues(String),
    #[error("column '{0}' is already encoded")]
    AlreadyEncoded(String),
    #[error("column '{0}' has {1} values but the table has {2} rows")]
    LengthMismatch(String, usize, usize),
    #[error("ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),
    #[error("k must be at least 1")]
    BadK,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TabularError>;

/// Feature names, row-major feature matrix, and 0/1 labels.
pub type Features = (Vec<String>, Vec<Vec<f64>>, Vec<u8>);

/// A single cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Canonical key used for equality across rows (joins, dedupe, class labels).
    pub fn key(&self) -> String {
        match self {
            Value::Num(v) => format_number(*v),
            Value::Text(s) => format!("t:{s}"),
            Value::Missing => "\u{0}missing".to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => f.write_str(&format_number(*v)),
            Value::Text(s) => f.write_str(s),
            Value::Missing => Ok(()),
        }
    }
}

/// Shortest round-trip decimal form; integral values print without a fraction.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        // folds -0.0 into 0
        "0".to_string()
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone)]
pub enum Column {
    /// `NaN` is a missing cell.
    Numeric(Vec<f64>),
    /// `None` is a missing cell.
    Text(Vec<Option<String>>),
}

impl PartialEq for Column {
    /// Missing cells compare equal to each other.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Column::Numeric(a), Column::Numeric(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
            }
            (Column::Text(a), Column::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Column::Numeric(_))
    }

    pub fn get(&self, row: usize) -> Value {
        match self {
            Column::Numeric(v) if v[row].is_nan() => Value::Missing,
            Column::Numeric(v) => Value::Num(v[row]),
            Column::Text(v) => v[row].clone().map_or(Value::Missing, Value::Text),
        }
    }

    pub fn missing_count(&self) -> usize {
        match self {
            Column::Numeric(v) => v.iter().filter(|x| x.is_nan()).count(),
            Column::Text(v) => v.iter().filter(|x| x.is_none()).count(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Text(v) => Column::Text(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }

    fn to_text(&self) -> Vec<Option<String>> {
        match self {
            Column::Numeric(v) => v.iter().map(|x| (!x.is_nan()).then(|| format_number(*x))).collect(),
            Column::Text(v) => v.clone(),
        }
    }

    fn append(&mut self, other: &Column) {
        match (&mut *self, other) {
            (Column::Numeric(a), Column::Numeric(b)) => a.extend_from_slice(b),
            (Column::Text(a), _) => a.extend(other.to_text()),
            (Column::Numeric(_), Column::Text(b)) => {
                let mut merged = self.to_text();
                merged.extend_from_slice(b);
                *self = Column::Text(merged);
            }
        }
    }
}

/// Column-oriented table with unique column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Table {
    pub fn new(names: Vec<String>, columns: Vec<Column>) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(TabularError::DuplicateColumn(name.clone()));
            }
        }
        assert_eq!(names.len(), columns.len(), "one name per column");
        let n_rows = columns.first().map_or(0, Column::len);
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(TabularError::LengthMismatch(name.clone(), col.len(), n_rows));
            }
        }
        Ok(Self { names, columns, n_rows })
    }

    /// Builds a table from row vectors; a column is numeric unless it holds text.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<Value>]) -> Result<Self> {
        let n_cols = names.len();
        let mut columns = Vec::with_capacity(n_cols);
        for c in 0..n_cols {
            let is_text = rows.iter().any(|r| matches!(r[c], Value::Text(_)));
            let col = if is_text {
                Column::Text(
                    rows.iter()
                        .map(|r| match &r[c] {
                            Value::Text(s) => Some(s.clone()),
                            Value::Num(v) => Some(format_number(*v)),
                            Value::Missing => None,
                        })
                        .collect(),
                )
            } else {
                Column::Numeric(rows.iter().map(|r| r[c].as_f64().unwrap_or(f64::NAN)).collect())
            };
            columns.push(col);
        }
        let mut table = Self::new(names, columns)?;
        table.n_rows = rows.len();
        Ok(table)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols())
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn column_at(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn value(&self, row: usize, col: usize) -> Value {
        self.columns[col].get(row)
    }

    pub fn row(&self, row: usize) -> Vec<Value> {
        self.columns.iter().map(|c| c.get(row)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<Value>> + '_ {
        (0..self.n_rows).map(|r| self.row(r))
    }

    /// Numeric view of a column; errors on text columns.
    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name) {
            Some(Column::Numeric(v)) => Ok(v),
            Some(Column::Text(_)) => Err(TabularError::NonNumericColumn(name.to_string())),
            None => Err(TabularError::UnknownColumn(name.to_string())),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Table {
        Table {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    pub fn drop_columns(&self, drop: &[&str]) -> Result<Table> {
        for name in drop {
            if self.column_index(name).is_none() {
                return Err(TabularError::UnknownColumn((*name).to_string()));
            }
        }
        let (names, columns) = self
            .names
            .iter()
            .zip(&self.columns)
            .filter(|(n, _)| !drop.contains(&n.as_str()))
            .map(|(n, c)| (n.clone(), c.clone()))
            .unzip();
        Ok(Table { names, columns, n_rows: self.n_rows })
    }

    pub fn with_column(&self, name: &str, column: Column) -> Result<Table> {
        if column.len() != self.n_rows {
            return Err(TabularError::LengthMismatch(name.to_string(), column.len(), self.n_rows));
        }
        let mut out = self.clone();
        match out.column_index(name) {
            Some(i) => out.columns[i] = column,
            None => {
                out.names.push(name.to_string());
                out.columns.push(column);
            }
        }
        Ok(out)
    }

    pub fn rename_column(&self, from: &str, to: &str) -> Result<Table> {
        let i = self.column_index(from).ok_or_else(|| TabularError::UnknownColumn(from.to_string()))?;
        if from != to && self.column_index(to).is_some() {
            return Err(TabularError::DuplicateColumn(to.to_string()));
        }
        let mut out = self.clone();
        out.names[i] = to.to_string();
        Ok(out)
    }

    /// Row-wise concatenation; both tables must share column names in order.
    pub fn concat(&self, other: &Table) -> Table {
        assert_eq!(self.names, other.names, "concat requires identical columns");
        let mut out = self.clone();
        for (a, b) in out.columns.iter_mut().zip(&other.columns) {
            a.append(b);
        }
        out.n_rows += other.n_rows;
        out
    }

    /// Per-column missing fraction, in column order.
    pub fn missing_fractions(&self) -> Vec<(String, f64)> {
        self.names
            .iter()
            .zip(&self.columns)
            .map(|(n, c)| {
                let frac = if self.n_rows == 0 { 0.0 } else { c.missing_count() as f64 / self.n_rows as f64 };
                (n.clone(), frac)
            })
            .collect()
    }

    /// Binary 0/1 labels of `target`.
    pub fn binary_labels(&self, target: &str) -> Result<Vec<u8>> {
        let col = self.column(target).ok_or_else(|| TabularError::UnknownTarget(target.to_string()))?;
        let Column::Numeric(v) = col else {
            return Err(TabularError::NonNumericColumn(target.to_string()));
        };
        v.iter()
            .map(|&x| {
                if x == 0.0 {
                    Ok(0)
                } else if x == 1.0 {
                    Ok(1)
                } else if x.is_nan() {
                    Err(TabularError::MissingValues(target.to_string()))
                } else {
                    let distinct: BTreeMap<String, ()> = v.iter().map(|x| (format_number(*x), ())).collect();
                    Err(TabularError::NotBinary { target: target.to_string(), found: distinct.len() })
                }
            })
            .collect()
    }

    /// Row-major numeric features (every non-target column) plus labels.
    pub fn features_and_labels(&self, target: &str) -> Result<Features> {
        let labels = self.binary_labels(target)?;
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for (name, col) in self.names.iter().zip(&self.columns) {
            if name == target {
                continue;
            }
            match col {
                Column::Numeric(v) => {
                    if v.iter().any(|x| x.is_nan()) {
                        return Err(TabularError::MissingValues(name.clone()));
                    }
                    names.push(name.clone());
                    cols.push(v);
                }
                Column::Text(_) => return Err(TabularError::NonNumericColumn(name.clone())),
            }
        }
        let rows = (0..self.n_rows).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        Ok((names, rows, labels))
    }
}

#[cfg(test)]
pub(crate) fn toy(names: &[&str], rows: Vec<Vec<Value>>) -> Table {
    Table::from_rows(names.iter().map(|s| s.to_string()).collect(), &rows).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let err = Table::new(vec!["a".into(), "a".into()], vec![Column::Numeric(vec![]), Column::Numeric(vec![])])
            .unwrap_err();
        assert!(matches!(err, TabularError::DuplicateColumn(_)));
    }

    #[test]
    fn rows_round_trip_through_columns() {
        let t = toy(
            &["x", "c"],
            vec![vec![Value::Num(1.5), Value::Text("a".into())], vec![Value::Missing, Value::Missing]],
        );
        assert_eq!(t.shape(), (2, 2));
        assert_eq!(t.row(0), vec![Value::Num(1.5), Value::Text("a".into())]);
        assert_eq!(t.row(1), vec![Value::Missing, Value::Missing]);
        assert_eq!(t.missing_fractions()[0].1, 0.5);
    }

    #[test]
    fn format_number_is_shortest_round_trip() {
        assert_eq!(format_number(5.0), "5");
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(-0.0), "0");
        let v = 0.9536671924290221_f64;
        assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
    }
}
