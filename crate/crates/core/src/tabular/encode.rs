use serde::{Deserialize, Serialize};

use super::schema::ColumnKind;
use super::{Column, ColumnSchema, Result, Table, TabularError};

/// Label encodings learned on training data. Codes are dense from 0 in
/// first-appearance order; a category unseen at fit time maps to the code
/// equal to the column's fitted cardinality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    columns: Vec<(String, Vec<String>)>,
}

impl EncoderState {
    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn categories(&self, column: &str) -> Option<&[String]> {
        self.columns.iter().find(|(n, _)| n == column).map(|(_, c)| c.as_slice())
    }

    pub fn code(&self, column: &str, category: &str) -> Option<usize> {
        let cats = self.categories(column)?;
        Some(cats.iter().position(|c| c == category).unwrap_or(cats.len()))
    }
}

/// Learns one encoder per text-valued categorical column of `train`.
pub fn fit_label_encoders(train: &Table, schema: &[ColumnSchema]) -> EncoderState {
    let mut columns = Vec::new();
    for col in schema.iter().filter(|c| c.kind == ColumnKind::Categorical) {
        let Some(Column::Text(values)) = train.column(&col.name) else {
            continue;
        };
        let mut cats: Vec<String> = Vec::new();
        for v in values.iter().flatten() {
            if !cats.contains(v) {
                cats.push(v.clone());
            }
        }
        columns.push((col.name.clone(), cats));
    }
    EncoderState { columns }
}

/// Replaces each encoded column with integer codes; missing stays missing.
pub fn apply_label_encoders(state: &EncoderState, table: &Table) -> Result<Table> {
    let mut out = table.clone();
    for (name, cats) in &state.columns {
        let col = table.column(name).ok_or_else(|| TabularError::UnknownColumn(name.clone()))?;
        let Column::Text(values) = col else {
            return Err(TabularError::AlreadyEncoded(name.clone()));
        };
        let codes = values
            .iter()
            .map(|v| match v {
                None => f64::NAN,
                Some(s) => cats.iter().position(|c| c == s).unwrap_or(cats.len()) as f64,
            })
            .collect();
        out = out.with_column(name, Column::Numeric(codes))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{infer_schema, toy, Value};

    fn t(vals: &[&str]) -> Table {
        toy(
            &["c", "x", "y"],
            vals.iter()
                .enumerate()
                .map(|(i, v)| vec![Value::Text((*v).into()), Value::Num(i as f64 + 0.5), Value::Num(0.0)])
                .collect(),
        )
    }

    #[test]
    fn first_appearance_order() {
        let train = t(&["Y", "N", "Y"]);
        let state = fit_label_encoders(&train, &infer_schema(&train, "y").unwrap());
        let enc = apply_label_encoders(&state, &train).unwrap();
        assert_eq!(enc.numeric("c").unwrap(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn unseen_maps_to_cardinality() {
        let train = t(&["Y", "N", "Y"]);
        let state = fit_label_encoders(&train, &infer_schema(&train, "y").unwrap());
        let enc = apply_label_encoders(&state, &t(&["MAYBE"])).unwrap();
        assert_eq!(enc.numeric("c").unwrap(), &[2.0]);
    }

    #[test]
    fn numeric_columns_untouched_and_reapply_rejected() {
        let train = t(&["a", "b"]);
        let state = fit_label_encoders(&train, &infer_schema(&train, "y").unwrap());
        let enc = apply_label_encoders(&state, &train).unwrap();
        assert_eq!(enc.column("x"), train.column("x"));
        assert!(matches!(apply_label_encoders(&state, &enc), Err(TabularError::AlreadyEncoded(_))));
    }
}
