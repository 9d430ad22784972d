use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hyper::{Grid, HyperValue, Hyperparams};
use super::{check_training_data, fit, label_of, Family, ModelError, Result};
use crate::seed;

/// Fold index per row. Each class is shuffled with the `cv` stream and dealt
/// round-robin, so every fold gets `floor` or `ceil` of each class.
pub fn stratified_folds(y: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(ModelError::TooFewFolds);
    }
    let mut rng = seed::stream(seed, seed::CV);
    let mut folds = vec![0; y.len()];
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.len() < k {
            return Err(ModelError::TooFewPerClass { folds: k, class, count: rows.len() });
        }
        rows.shuffle(&mut rng);
        for (pos, r) in rows.into_iter().enumerate() {
            folds[r] = pos % k;
        }
    }
    Ok(folds)
}

/// Accuracy on each held-out fold, in fold order.
pub fn cross_validate(
    family: Family,
    hyperparams: &Hyperparams,
    x: &[Vec<f64>],
    y: &[f64],
    folds: &[usize],
    k: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..k)
        .into_par_iter()
        .map(|f| {
            let (mut xt, mut yt, mut xv, mut yv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, &fi) in folds.iter().enumerate() {
                if fi == f {
                    xv.push(x[i].clone());
                    yv.push(y[i]);
                } else {
                    xt.push(x[i].clone());
                    yt.push(y[i]);
                }
            }
            let est = fit(family, hyperparams, &[], &xt, &yt, seed)?;
            let correct = xv.iter().zip(&yv).filter(|(row, &t)| f64::from(label_of(est.score_row(row))) == t).count();
            Ok(correct as f64 / yv.len().max(1) as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub family: Family,
    pub hyperparams: Hyperparams,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub family: Family,
    pub hyperparams: Hyperparams,
    pub mean_accuracy: f64,
    pub folds: usize,
    pub cv_table: Vec<CvRow>,
    pub rationale: String,
}

pub fn default_grid(family: Family) -> Grid {
    use HyperValue::{Int, Real};
    match family {
        Family::LogisticRegression => Grid::new(vec![("l2", vec![Real(0.01), Real(0.1), Real(1.0)])]),
        Family::DecisionTree => Grid::new(vec![("max_depth", vec![Int(3), Int(5), Int(8)])]),
        Family::RandomForest => {
            Grid::new(vec![("n_estimators", vec![Int(100), Int(200)]), ("max_depth", vec![Int(5), Int(8)])])
        }
        Family::GradientBoosting => Grid::new(vec![
            ("learning_rate", vec![Real(0.05), Real(0.1)]),
            ("max_depth", vec![Int(3), Int(5)]),
            ("n_estimators", vec![Int(100), Int(200)]),
        ]),
    }
}

/// Stratified k-fold grid search over every (family, combo); the highest mean
/// accuracy wins and ties keep the earlier candidate.
pub fn grid_search_select(
    candidates: &[(Family, Grid)],
    x: &[Vec<f64>],
    y: &[f64],
    folds: usize,
    seed: u64,
) -> Result<SelectionResult> {
    let labels = check_training_data(x, y)?;
    let assignment = stratified_folds(&labels, folds, seed)?;
    let mut table = Vec::new();
    for (family, grid) in candidates {
        for combo in grid.combos() {
            let hp = combo.resolved(*family)?;
            let fold_accuracy = cross_validate(*family, &hp, x, y, &assignment, folds, seed)?;
            let mean_accuracy = fold_accuracy.iter().sum::<f64>() / folds as f64;
            table.push(CvRow { family: *family, hyperparams: hp, fold_accuracy, mean_accuracy });
        }
    }
    let mut best: Option<&CvRow> = None;
    for row in &table {
        if best.is_none_or(|b| row.mean_accuracy > b.mean_accuracy) {
            best = Some(row);
        }
    }
    let best = best.ok_or(ModelError::EmptyGrid)?.clone();
    let rationale = format!(
        "{} with {} achieved the highest mean accuracy ({:.4}) across {} stratified folds out of {} candidate configurations.",
        best.family.label(),
        best.hyperparams,
        best.mean_accuracy,
        folds,
        table.len()
    );
    Ok(SelectionResult {
        family: best.family,
        hyperparams: best.hyperparams,
        mean_accuracy: best.mean_accuracy,
        folds,
        cv_table: table,
        rationale,
    })
}

pub fn tune_hyperparameters(
    family: Family,
    grid: &Grid,
    x: &[Vec<f64>],
    y: &[f64],
    folds: usize,
    seed: u64,
) -> Result<SelectionResult> {
    if grid.combos().is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    grid_search_select(&[(family, grid.clone())], x, y, folds, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified() {
        let y: Vec<u8> = (0..23).map(|i| u8::from(i % 3 == 0)).collect();
        let f = stratified_folds(&y, 4, 9).unwrap();
        for class in [0, 1] {
            let mut counts = [0; 4];
            for (i, &fi) in f.iter().enumerate() {
                if y[i] == class {
                    counts[fi] += 1;
                }
            }
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
        assert!(matches!(stratified_folds(&[0, 0, 1], 2, 1), Err(ModelError::TooFewPerClass { class: 1, .. })));
    }

    #[test]
    fn single_combo_wins() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| f64::from(u8::from(i >= 10))).collect();
        let grid = Grid::new(vec![("max_depth", vec![HyperValue::Int(2)])]);
        let r = tune_hyperparameters(Family::DecisionTree, &grid, &x, &y, 2, 1).unwrap();
        assert_eq!(r.hyperparams.get("max_depth"), Some(HyperValue::Int(2)));
        assert!(matches!(
            tune_hyperparameters(Family::DecisionTree, &Grid::new(vec![("max_depth", vec![])]), &x, &y, 2, 1),
            Err(ModelError::EmptyGrid)
        ));
    }
}
