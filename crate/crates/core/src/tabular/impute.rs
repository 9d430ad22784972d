use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use super::{Column, Result, Table, TabularError};

/// K-nearest-neighbour imputer fitted on training rows.
///
/// Distances are Euclidean over standardized numeric columns, using only the
/// columns the query row actually has. Reference rows are the training rows
/// complete in every distance column. Text columns fall back to the training
/// mode.
#[derive(Debug, Clone)]
pub struct ImputerState {
    k: usize,
    columns: Vec<String>,
    means: Vec<f64>,
    scales: Vec<f64>,
    /// Raw values of the complete training rows, row-major.
    reference: Vec<Vec<f64>>,
    modes: HashMap<String, String>,
}

impl ImputerState {
    pub fn fit(train: &Table, k: usize, exclude: &[&str]) -> Result<Self> {
        if k == 0 {
            return Err(TabularError::BadK);
        }
        let mut columns = Vec::new();
        let mut data: Vec<&[f64]> = Vec::new();
        let mut modes = HashMap::new();
        for (name, col) in train.column_names().iter().zip(train.columns()) {
            if exclude.contains(&name.as_str()) {
                continue;
            }
            match col {
                Column::Numeric(v) => {
                    columns.push(name.clone());
                    data.push(v);
                }
                Column::Text(v) => {
                    if let Some(m) = mode(v) {
                        modes.insert(name.clone(), m);
                    }
                }
            }
        }
        let (mut means, mut scales) = (Vec::new(), Vec::new());
        for v in &data {
            let present: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
            let n = present.len().max(1) as f64;
            let mean = present.iter().sum::<f64>() / n;
            let var = present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            scales.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        let reference: Vec<Vec<f64>> = (0..train.n_rows())
            .filter(|&r| data.iter().all(|c| !c[r].is_nan()))
            .map(|r| data.iter().map(|c| c[r]).collect())
            .collect();
        if reference.len() < k {
            return Err(TabularError::TooFewCompleteRows { needed: k, found: reference.len() });
        }
        Ok(Self { k, columns, means, scales, reference, modes })
    }

    /// Indices into the reference rows of the `k` nearest neighbours of
    /// `row` (NaN = absent), ties broken by reference order.
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let z: Vec<Option<f64>> =
            row.iter().enumerate().map(|(j, x)| (!x.is_nan()).then(|| (x - self.means[j]) / self.scales[j])).collect();
        let mut scored: Vec<(f64, usize)> = self
            .reference
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = z
                    .iter()
                    .enumerate()
                    .filter_map(|(j, q)| q.map(|q| (q - (r[j] - self.means[j]) / self.scales[j]).powi(2)))
                    .sum();
                (d, i)
            })
            .collect();
        let cmp =
            |a: &(f64, usize), b: &(f64, usize)| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
        if scored.len() > self.k {
            scored.select_nth_unstable_by(self.k - 1, cmp);
            scored.truncate(self.k);
        }
        scored.sort_by(cmp);
        scored.into_iter().map(|(_, i)| i).collect()
    }

    pub fn transform(&self, table: &Table) -> Result<Table> {
        let idx: Vec<usize> = self
            .columns
            .iter()
            .map(|c| table.column_index(c).ok_or_else(|| TabularError::UnknownColumn(c.clone())))
            .collect::<Result<_>>()?;
        let data: Vec<&[f64]> = idx
            .iter()
            .map(|&i| match table.column_at(i) {
                Column::Numeric(v) => Ok(v.as_slice()),
                Column::Text(_) => Err(TabularError::NonNumericColumn(table.column_names()[i].clone())),
            })
            .collect::<Result<_>>()?;
        let fills: Vec<(usize, Vec<(usize, f64)>)> = (0..table.n_rows())
            .into_par_iter()
            .filter_map(|r| {
                let row: Vec<f64> = data.iter().map(|c| c[r]).collect();
                if !row.iter().any(|x| x.is_nan()) {
                    return None;
                }
                let nn = self.neighbours(&row);
                let cells = row
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| x.is_nan())
                    .map(|(j, _)| {
                        let mean = nn.iter().map(|&i| self.reference[i][j]).sum::<f64>() / nn.len() as f64;
                        (j, mean)
                    })
                    .collect();
                Some((r, cells))
            })
            .collect();
        let mut out = table.clone();
        let mut new_cols: Vec<Vec<f64>> = data.iter().map(|c| c.to_vec()).collect();
        for (r, cells) in fills {
            for (j, v) in cells {
                new_cols[j][r] = v;
            }
        }
        for (j, col) in new_cols.into_iter().enumerate() {
            out = out.with_column(&self.columns[j], Column::Numeric(col))?;
        }
        for (name, fill) in &self.modes {
            if let Some(Column::Text(v)) = table.column(name) {
                if v.iter().any(Option::is_none) {
                    let filled = v.iter().map(|x| Some(x.clone().unwrap_or_else(|| fill.clone()))).collect();
                    out = out.with_column(name, Column::Text(filled))?;
                }
            }
        }
        Ok(out)
    }
}

/// Most frequent value; ties go to the earliest first appearance.
fn mode(values: &[Option<String>]) -> Option<String> {
    let mut counts: Vec<(&String, usize)> = Vec::new();
    for v in values.iter().flatten() {
        match counts.iter_mut().find(|(s, _)| *s == v) {
            Some((_, c)) => *c += 1,
            None => counts.push((v, 1)),
        }
    }
    let best = counts.iter().map(|(_, c)| *c).max()?;
    counts.into_iter().find(|(_, c)| *c == best).map(|(s, _)| s.clone())
}

/// Fits on `train` (ignoring `exclude`, typically the target) and fills `table`.
pub fn knn_impute(train: &Table, table: &Table, k: usize, exclude: &[&str]) -> Result<Table> {
    ImputerState::fit(train, k, exclude)?.transform(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{toy, Value};

    fn n(v: f64) -> Value {
        Value::Num(v)
    }

    #[test]
    fn four_row_toy_matches_hand_enumeration() {
        // standardized x: refs at x=1,2,3; query x=2. Distances 1,0,1 (scaled)
        // so the two nearest are x=2 (y=2) then x=1 (y=1, earlier index).
        let t = toy(
            &["x", "y"],
            vec![vec![n(1.0), n(1.0)], vec![n(2.0), n(2.0)], vec![n(3.0), n(3.0)], vec![n(2.0), Value::Missing]],
        );
        let out = knn_impute(&t, &t, 2, &[]).unwrap();
        assert_eq!(out.value(3, 1), n(1.5));
    }

    #[test]
    fn complete_table_unchanged() {
        let t = toy(&["x", "y"], (0..6).map(|i| vec![n(i as f64), n(i as f64 * 2.0)]).collect());
        assert_eq!(knn_impute(&t, &t, 5, &[]).unwrap(), t);
    }

    #[test]
    fn too_few_complete_rows() {
        let t = toy(&["x"], vec![vec![n(1.0)], vec![Value::Missing]]);
        assert!(matches!(knn_impute(&t, &t, 2, &[]), Err(TabularError::TooFewCompleteRows { needed: 2, found: 1 })));
    }

    #[test]
    fn text_columns_take_train_mode() {
        let t = toy(
            &["c", "x"],
            vec![
                vec![Value::Text("b".into()), n(1.0)],
                vec![Value::Text("a".into()), n(2.0)],
                vec![Value::Text("a".into()), n(3.0)],
                vec![Value::Missing, n(4.0)],
            ],
        );
        let out = knn_impute(&t, &t, 1, &[]).unwrap();
        assert_eq!(out.value(3, 0), Value::Text("a".into()));
    }

    #[test]
    fn excluded_columns_not_used() {
        let t = toy(&["x", "target"], vec![vec![n(1.0), n(0.0)], vec![Value::Missing, n(1.0)], vec![n(3.0), n(1.0)]]);
        let out = knn_impute(&t, &t, 2, &["target"]).unwrap();
        // no distance columns present for row 1: neighbours are the first two refs
        assert_eq!(out.value(1, 0), n(2.0));
        assert_eq!(out.column("target"), t.column("target"));
    }
}
