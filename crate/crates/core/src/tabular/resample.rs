use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{Column, Result, Table, TabularError};
use crate::seed;

/// Fraction of rows per class label of `target`.
pub fn class_proportions(table: &Table, target: &str) -> Result<BTreeMap<String, f64>> {
    let col = table.column(target).ok_or_else(|| TabularError::UnknownTarget(target.to_string()))?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in 0..table.n_rows() {
        *counts.entry(col.get(r).to_string()).or_default() += 1;
    }
    let n = table.n_rows() as f64;
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
}

/// Row indices per class, classes ordered by label.
fn class_rows(table: &Table, target: &str) -> Result<Vec<(String, Vec<usize>)>> {
    let col = table.column(target).ok_or_else(|| TabularError::UnknownTarget(target.to_string()))?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for r in 0..table.n_rows() {
        groups.entry(col.get(r).to_string()).or_default().push(r);
    }
    match groups.len() {
        1 => Err(TabularError::SingleClass(target.to_string())),
        2 => Ok(groups.into_iter().collect()),
        found => Err(TabularError::NotBinary { target: target.to_string(), found }),
    }
}

/// (minority rows, majority rows); on equal counts the first label is "minority".
fn minority_majority(groups: Vec<(String, Vec<usize>)>) -> (Vec<usize>, Vec<usize>) {
    let mut it = groups.into_iter();
    let (_, a) = it.next().unwrap();
    let (_, b) = it.next().unwrap();
    if b.len() < a.len() {
        (b, a)
    } else {
        (a, b)
    }
}

/// Oversamples the minority class with SMOTE until both classes are equal.
///
/// Each synthetic row is `x_i + λ·(x_nn − x_i)` for a uniformly drawn
/// minority row `x_i`, one of its `k` nearest minority neighbours `x_nn`,
/// and `λ ~ U(0, 1)`, all drawn from the `smote` substream. Original rows
/// come first; synthetic rows are appended.
pub fn smote(table: &Table, target: &str, k: usize, seed: u64) -> Result<Table> {
    if k == 0 {
        return Err(TabularError::BadK);
    }
    let (minority, majority) = minority_majority(class_rows(table, target)?);
    if minority.len() < 2 {
        return Err(TabularError::MinorityTooSmall(minority.len()));
    }
    let n_new = majority.len() - minority.len();
    if n_new == 0 {
        return Ok(table.clone());
    }
    let feature_idx: Vec<usize> = (0..table.n_cols()).filter(|&c| table.column_names()[c] != target).collect();
    let mut features: Vec<&[f64]> = Vec::with_capacity(feature_idx.len());
    for &c in &feature_idx {
        let name = &table.column_names()[c];
        match table.column_at(c) {
            Column::Numeric(v) if v.iter().any(|x| x.is_nan()) => {
                return Err(TabularError::MissingValues(name.clone()))
            }
            Column::Numeric(v) => features.push(v),
            Column::Text(_) => return Err(TabularError::NonNumericColumn(name.clone())),
        }
    }
    let points: Vec<Vec<f64>> = minority.iter().map(|&r| features.iter().map(|c| c[r]).collect()).collect();
    let k_eff = k.min(points.len() - 1);
    let neighbours: Vec<Vec<usize>> = (0..points.len()).into_par_iter().map(|i| nearest(&points, i, k_eff)).collect();

    let mut rng = seed::stream(seed, seed::SMOTE);
    let mut synthetic: Vec<Vec<f64>> = vec![Vec::with_capacity(n_new); features.len()];
    for _ in 0..n_new {
        let i = rng.random_range(0..points.len());
        let j = neighbours[i][rng.random_range(0..k_eff)];
        let lambda: f64 = rng.random();
        for (c, col) in synthetic.iter_mut().enumerate() {
            let (a, b) = (points[i][c], points[j][c]);
            col.push(a + lambda * (b - a));
        }
    }

    let target_idx = table.column_index(target).unwrap();
    let label = table.column_at(target_idx).select(&[minority[0]]);
    let mut extra_cols = Vec::with_capacity(table.n_cols());
    let mut feats = synthetic.into_iter();
    for c in 0..table.n_cols() {
        if c == target_idx {
            extra_cols.push(label.select(&vec![0; n_new]));
        } else {
            extra_cols.push(Column::Numeric(feats.next().unwrap()));
        }
    }
    let extra = Table::new(table.column_names().to_vec(), extra_cols)?;
    Ok(table.concat(&extra))
}

/// The `k` nearest other points to `points[i]` (squared Euclidean), ties by index.
fn nearest(points: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, p)| (p.iter().zip(&points[i]).map(|(a, b)| (a - b) * (a - b)).sum(), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
    if d.len() > k {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d.into_iter().map(|(_, j)| j).collect()
}

/// Subsamples the majority class without replacement (`downsample`
/// substream) down to the minority count. Row order is preserved.
pub fn random_downsample(table: &Table, target: &str, seed: u64) -> Result<Table> {
    let (minority, mut majority) = minority_majority(class_rows(table, target)?);
    majority.shuffle(&mut seed::stream(seed, seed::DOWNSAMPLE));
    majority.truncate(minority.len());
    let mut keep: Vec<usize> = minority.into_iter().chain(majority).collect();
    keep.sort_unstable();
    Ok(table.select_rows(&keep))
}
