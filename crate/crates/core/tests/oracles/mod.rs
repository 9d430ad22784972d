//! Independent reference implementations and the checks that compare the
//! library against them. Each check returns the first disagreement found.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crewlab_core::model_lab::logistic::Objective;
use crewlab_core::model_lab::{
    auc, compute_metrics, fit, grid_search_select, stratified_folds, Family, Grid, HyperValue, Logistic,
};
use crewlab_core::seed;
use crewlab_core::tabular::{knn_impute, random_downsample, smote, Column, Table};

pub type Check = Result<(), String>;

fn rng(name: &str) -> ChaCha8Rng {
    seed::stream(20240611, name)
}

fn bits(s: &str) -> Vec<u8> {
    s.bytes().map(|b| b - b'0').collect()
}

/// (truth, prediction, [tp, fp, tn, fn]) counted by hand.
pub const FIXED_VECTORS: [(&str, &str, [usize; 4]); 20] = [
    ("1", "1", [1, 0, 0, 0]),
    ("0", "0", [0, 0, 1, 0]),
    ("10", "01", [0, 1, 0, 1]),
    ("1100", "1010", [1, 1, 1, 1]),
    ("0000", "0000", [0, 0, 4, 0]),
    ("1111", "0000", [0, 0, 0, 4]),
    ("110100001101", "000011010001", [1, 3, 3, 5]),
    ("00000", "00110", [0, 2, 3, 0]),
    ("00011011001", "01101011111", [4, 4, 2, 1]),
    ("11001", "01101", [2, 1, 1, 1]),
    ("10100000", "11111011", [2, 5, 1, 0]),
    ("100", "110", [1, 1, 1, 0]),
    ("10111000", "11000100", [1, 2, 2, 3]),
    ("111100011000", "100110011010", [4, 2, 4, 2]),
    ("11111111001", "01100111010", [5, 1, 1, 4]),
    ("1111110", "0111111", [5, 1, 0, 1]),
    ("11111101110", "00111010111", [5, 2, 0, 4]),
    ("001", "000", [0, 0, 2, 1]),
    ("100", "000", [0, 0, 2, 1]),
    ("01001111", "00010111", [3, 1, 2, 2]),
];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn metrics_fixed_vectors() -> Check {
    for (t, p, [tp, fp, tn, fn_]) in FIXED_VECTORS {
        let (y, pred) = (bits(t), bits(p));
        let scores: Vec<f64> = pred.iter().map(|&v| f64::from(v)).collect();
        let m = compute_metrics(&y, &pred, &scores).map_err(|e| e.to_string())?;
        let c = m.confusion;
        if [c.tp, c.fp, c.tn, c.fn_] != [tp, fp, tn, fn_] {
            return Err(format!("{t}/{p}: confusion {c:?}"));
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        let want = [ratio(tp + tn, y.len()), precision, recall, f1];
        let got = [m.accuracy, m.precision, m.recall, m.f1];
        if want.iter().zip(&got).any(|(a, b)| !close(*a, *b, 1e-12)) {
            return Err(format!("{t}/{p}: metrics {got:?}, expected {want:?}"));
        }
    }
    Ok(())
}

/// P(s+ > s-) + P(s+ = s-)/2 over every positive/negative pair.
pub fn pairwise_auc(y: &[u8], s: &[f64]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0usize);
    for i in (0..y.len()).filter(|&i| y[i] == 1) {
        for j in (0..y.len()).filter(|&j| y[j] == 0) {
            pairs += 1;
            if s[i] > s[j] {
                wins += 1.0;
            } else if s[i] == s[j] {
                wins += 0.5;
            }
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

/// Every labelling of n <= 8 points with scores from a three-level
/// alphabet (so ties occur), plus random continuous scores.
pub fn auc_exhaustive() -> Check {
    const LEVELS: [f64; 3] = [0.0, 0.25, 0.5];
    for n in 1..=8usize {
        for labels in 0u32..(1 << n) {
            let y: Vec<u8> = (0..n).map(|i| ((labels >> i) & 1) as u8).collect();
            for code in 0..3usize.pow(n as u32) {
                let mut c = code;
                let s: Vec<f64> = (0..n)
                    .map(|_| {
                        let v = LEVELS[c % 3];
                        c /= 3;
                        v
                    })
                    .collect();
                let (got, want) = (auc(&y, &s), pairwise_auc(&y, &s));
                match (got, want) {
                    (None, None) => {}
                    (Some(a), Some(b)) if close(a, b, 1e-12) => {}
                    _ => return Err(format!("y={y:?} s={s:?}: {got:?} vs {want:?}")),
                }
            }
        }
    }
    let mut r = rng("auc");
    for _ in 0..2000 {
        let n = r.random_range(2..=8);
        let y: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let s: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let (got, want) = (auc(&y, &s), pairwise_auc(&y, &s));
        if got.zip(want).is_some_and(|(a, b)| !close(a, b, 1e-12)) || got.is_some() != want.is_some() {
            return Err(format!("y={y:?} s={s:?}: {got:?} vs {want:?}"));
        }
    }
    Ok(())
}

/// AUC of hard labels equals balanced accuracy.
pub fn auc_label_is_balanced_accuracy() -> Check {
    let mut r = rng("auc-label");
    let mut done = 0;
    while done < 100 {
        let n = r.random_range(2..60);
        let y: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        let pred: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let scores: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let m = compute_metrics(&y, &pred, &scores).map_err(|e| e.to_string())?;
        let pos = y.iter().filter(|&&v| v == 1).count() as f64;
        let neg = n as f64 - pos;
        let tpr = (0..n).filter(|&i| y[i] == 1 && pred[i] == 1).count() as f64 / pos;
        let tnr = (0..n).filter(|&i| y[i] == 0 && pred[i] == 0).count() as f64 / neg;
        let balanced = (tpr + tnr) / 2.0;
        match m.auc_label {
            Some(v) if close(v, balanced, 1e-12) => {}
            other => return Err(format!("y={y:?} pred={pred:?}: auc_label {other:?}, balanced {balanced}")),
        }
        done += 1;
    }
    Ok(())
}

/// Numeric features f0.. plus a 0/1 label `y` with `n_pos` positives first.
pub fn labelled_table(r: &mut ChaCha8Rng, n: usize, n_pos: usize, p: usize) -> Table {
    let mut names: Vec<String> = (0..p).map(|j| format!("f{j}")).collect();
    let mut cols: Vec<Column> =
        (0..p).map(|_| Column::Numeric((0..n).map(|_| r.random_range(-5.0..5.0)).collect())).collect();
    names.push("y".into());
    cols.push(Column::Numeric((0..n).map(|i| f64::from(u8::from(i < n_pos))).collect()));
    Table::new(names, cols).expect("equal lengths")
}

fn rows_of(t: &Table) -> Vec<Vec<f64>> {
    let (_, x, _) = t.features_and_labels("y").expect("numeric table");
    x
}

/// `x` lies on the segment from `a` to `b`, with one λ for every coordinate.
pub fn on_segment(a: &[f64], b: &[f64], x: &[f64], tol: f64) -> bool {
    let mut lambda: Option<f64> = None;
    for c in 0..a.len() {
        let d = b[c] - a[c];
        if d.abs() <= tol {
            if (x[c] - a[c]).abs() > tol {
                return false;
            }
            continue;
        }
        let l = (x[c] - a[c]) / d;
        if !(-tol..=1.0 + tol).contains(&l) {
            return false;
        }
        match lambda {
            None => lambda = Some(l),
            Some(l0) if (l - l0).abs() <= tol => {}
            Some(_) => return false,
        }
    }
    true
}

pub fn smote_invariants(cases: usize) -> Check {
    let mut r = rng("smote");
    for case in 0..cases {
        let n = r.random_range(8..40);
        let n_pos = r.random_range(2..=n / 2);
        let p = r.random_range(1..5);
        let k = r.random_range(1..6);
        let s = r.random::<u64>();
        let t = labelled_table(&mut r, n, n_pos, p);
        let out = smote(&t, "y", k, s).map_err(|e| e.to_string())?;
        let labels = out.binary_labels("y").map_err(|e| e.to_string())?;
        let ones = labels.iter().filter(|&&v| v == 1).count();
        if ones * 2 != labels.len() {
            return Err(format!("case {case}: {ones} positives of {}", labels.len()));
        }
        let original = rows_of(&t);
        let minority: Vec<&Vec<f64>> = original[..n_pos].iter().collect();
        let all = rows_of(&out);
        if all[..n] != original[..] {
            return Err(format!("case {case}: original rows changed"));
        }
        for (i, x) in all[n..].iter().enumerate() {
            if labels[n + i] != 1 {
                return Err(format!("case {case}: synthetic row {i} is not minority"));
            }
            let ok = minority
                .iter()
                .enumerate()
                .any(|(a, pa)| minority.iter().enumerate().any(|(b, pb)| a != b && on_segment(pa, pb, x, 1e-9)));
            if !ok {
                return Err(format!("case {case}: synthetic row {x:?} is not between two minority rows"));
            }
        }
        let again = smote(&t, "y", k, s).map_err(|e| e.to_string())?;
        if rows_of(&again) != all {
            return Err(format!("case {case}: smote is not deterministic"));
        }
    }
    Ok(())
}

pub fn downsample_invariants(cases: usize) -> Check {
    let mut r = rng("downsample");
    for case in 0..cases {
        let n = r.random_range(4..60);
        let n_pos = r.random_range(1..=n / 2);
        let t = labelled_table(&mut r, n, n_pos, 2);
        let s = r.random::<u64>();
        let out = random_downsample(&t, "y", s).map_err(|e| e.to_string())?;
        if out.n_rows() != 2 * n_pos {
            return Err(format!("case {case}: {} rows, minority {n_pos}", out.n_rows()));
        }
        let again = random_downsample(&t, "y", s).map_err(|e| e.to_string())?;
        if rows_of(&again) != rows_of(&out) {
            return Err(format!("case {case}: downsample is not deterministic"));
        }
        let original = rows_of(&t);
        if rows_of(&out).iter().any(|row| !original.contains(row)) {
            return Err(format!("case {case}: downsample invented a row"));
        }
    }
    Ok(())
}

fn table_with_gaps(r: &mut ChaCha8Rng, n: usize, p: usize, gap: f64) -> Table {
    let mut names: Vec<String> = (0..p).map(|j| format!("f{j}")).collect();
    let mut cols: Vec<Column> =
        (0..p)
            .map(|_| {
                Column::Numeric(
                    (0..n)
                        .map(|_| {
                            if r.random::<f64>() < gap {
                                f64::NAN
                            } else {
                                f64::from(r.random_range(-20i32..20)) / 4.0
                            }
                        })
                        .collect(),
                )
            })
            .collect();
    names.push("y".into());
    cols.push(Column::Numeric((0..n).map(|_| f64::from(r.random_range(0u8..2))).collect()));
    Table::new(names, cols).expect("equal lengths")
}

fn numeric_cols(t: &Table, p: usize) -> Vec<Vec<f64>> {
    (0..p).map(|j| t.numeric(&format!("f{j}")).expect("numeric").to_vec()).collect()
}

/// Sorts every complete training row by standardized distance over the
/// query's present coordinates and averages the first k.
pub fn brute_force_impute(train: &Table, query: &Table, p: usize, k: usize) -> Vec<Vec<f64>> {
    let tc = numeric_cols(train, p);
    let mut means = Vec::new();
    let mut scales = Vec::new();
    for col in &tc {
        let present: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        let n = present.len().max(1) as f64;
        let mean = present.iter().sum::<f64>() / n;
        let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        means.push(mean);
        scales.push(if var > 0.0 { var.sqrt() } else { 1.0 });
    }
    let reference: Vec<Vec<f64>> = (0..train.n_rows())
        .filter(|&i| tc.iter().all(|c| !c[i].is_nan()))
        .map(|i| tc.iter().map(|c| c[i]).collect())
        .collect();
    let mut out = numeric_cols(query, p);
    for row in 0..query.n_rows() {
        let q: Vec<f64> = out.iter().map(|c| c[row]).collect();
        if !q.iter().any(|v| v.is_nan()) {
            continue;
        }
        let mut d: Vec<(f64, usize)> = reference
            .iter()
            .enumerate()
            .map(|(i, rr)| {
                let dist: f64 = (0..p)
                    .filter(|&j| !q[j].is_nan())
                    .map(|j| ((q[j] - means[j]) / scales[j] - (rr[j] - means[j]) / scales[j]).powi(2))
                    .sum();
                (dist, i)
            })
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for j in (0..p).filter(|&j| q[j].is_nan()) {
            let fill = d[..k].iter().map(|&(_, i)| reference[i][j]).sum::<f64>() / k as f64;
            out[j][row] = fill;
        }
    }
    out
}

pub fn knn_oracle(cases: usize) -> Check {
    let mut r = rng("knn");
    let mut done = 0;
    while done < cases {
        let p = r.random_range(1..5);
        let k = r.random_range(1..5);
        let (n_train, n_query) = (r.random_range(5..=30), r.random_range(1..=30));
        let train = table_with_gaps(&mut r, n_train, p, 0.2);
        let query = table_with_gaps(&mut r, n_query, p, 0.3);
        let got = match knn_impute(&train, &query, k, &["y"]) {
            Ok(t) => t,
            // fewer than k complete rows: draw another table
            Err(_) => continue,
        };
        let want = brute_force_impute(&train, &query, p, k);
        let got = numeric_cols(&got, p);
        let same = got.iter().flatten().zip(want.iter().flatten()).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Err(format!("case {done}: imputed {got:?}, oracle {want:?}"));
        }
        done += 1;
    }
    Ok(())
}

pub fn grid_candidates() -> Vec<(Family, Grid)> {
    use HyperValue::{Int, Real};
    vec![
        (Family::DecisionTree, Grid::new(vec![("max_depth", vec![Int(1), Int(2), Int(4)])])),
        (Family::LogisticRegression, Grid::new(vec![("l2", vec![Real(0.01), Real(1.0)])])),
        (
            Family::GradientBoosting,
            Grid::new(vec![
                ("learning_rate", vec![Real(0.3)]),
                ("max_depth", vec![Int(1), Int(2)]),
                ("n_estimators", vec![Int(5)]),
            ]),
        ),
    ]
}

/// Fits every (family, combo) on every fold and keeps the first best mean.
pub fn exhaustive_selection(
    candidates: &[(Family, Grid)],
    x: &[Vec<f64>],
    y: &[f64],
    folds: usize,
    s: u64,
) -> Result<(Family, crewlab_core::model_lab::Hyperparams, f64), String> {
    let labels: Vec<u8> = y.iter().map(|&v| v as u8).collect();
    let assignment = stratified_folds(&labels, folds, s).map_err(|e| e.to_string())?;
    let mut best: Option<(Family, crewlab_core::model_lab::Hyperparams, f64)> = None;
    for (family, grid) in candidates {
        for combo in grid.combos() {
            let hp = combo.resolved(*family).map_err(|e| e.to_string())?;
            let mut accs = Vec::new();
            for f in 0..folds {
                let train: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != f).collect();
                let held: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == f).collect();
                let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
                let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let est = fit(*family, &hp, &[], &xt, &yt, s).map_err(|e| e.to_string())?;
                let xv: Vec<Vec<f64>> = held.iter().map(|&i| x[i].clone()).collect();
                let pred = est.predict(&xv).map_err(|e| e.to_string())?;
                let correct = held.iter().zip(&pred).filter(|(&i, &p)| f64::from(p) == y[i]).count();
                accs.push(correct as f64 / held.len() as f64);
            }
            let mean = accs.iter().sum::<f64>() / folds as f64;
            if best.as_ref().is_none_or(|b| mean > b.2) {
                best = Some((*family, hp, mean));
            }
        }
    }
    best.ok_or_else(|| "empty grid".to_string())
}

pub fn grid_search_oracle(cases: usize) -> Check {
    let mut r = rng("grid");
    let candidates = grid_candidates();
    let combos: usize = candidates.iter().map(|(_, g)| g.combos().len()).sum();
    assert!(combos <= 8);
    let mut done = 0;
    while done < cases {
        let n = r.random_range(20..=50);
        let folds = r.random_range(2..=4);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]).collect();
        let y: Vec<f64> =
            x.iter().map(|row| f64::from(u8::from(row[0] - 0.5 * row[1] + r.random_range(-1.0..1.0) > 0.0))).collect();
        let pos = y.iter().filter(|&&v| v == 1.0).count();
        if pos < folds || n - pos < folds {
            continue;
        }
        let s = r.random::<u64>() % 1000;
        let got = grid_search_select(&candidates, &x, &y, folds, s).map_err(|e| e.to_string())?;
        let (family, hp, mean) = exhaustive_selection(&candidates, &x, &y, folds, s)?;
        if got.family != family || got.hyperparams != hp || got.mean_accuracy != mean {
            return Err(format!(
                "case {done}: selected {:?} {} ({}), oracle {family:?} {hp} ({mean})",
                got.family, got.hyperparams, got.mean_accuracy
            ));
        }
        done += 1;
    }
    Ok(())
}

/// Norm-wise relative error of the analytic gradient against central
/// differences, for random data and parameters.
pub fn lr_gradient_check(cases: usize) -> Check {
    let mut r = rng("lr-grad");
    for case in 0..cases {
        let n = r.random_range(5..60);
        let p = r.random_range(1..5);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let l2 = [0.0, 0.01, 1.0][case % 3];
        let obj = Objective::new(&x, &y, l2);
        let theta: Vec<f64> = (0..obj.dim()).map(|_| r.random_range(-1.5..1.5)).collect();
        let g = obj.gradient(&theta);
        let h = 1e-5;
        let fd: Vec<f64> = (0..theta.len())
            .map(|j| {
                let (mut up, mut down) = (theta.clone(), theta.clone());
                up[j] += h;
                down[j] -= h;
                (obj.value(&up) - obj.value(&down)) / (2.0 * h)
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&g).max(norm(&fd)).max(1e-12);
        if rel >= 1e-5 {
            return Err(format!("case {case}: relative error {rel:e}"));
        }
    }
    Ok(())
}

pub fn lr_loss_monotone(cases: usize) -> Check {
    let mut r = rng("lr-loss");
    for case in 0..cases {
        let n = r.random_range(10..80);
        let p = r.random_range(1..4);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| r.random_range(-3.0..3.0)).collect()).collect();
        let y: Vec<u8> = x.iter().map(|row| u8::from(row[0] + r.random_range(-1.0..1.0) > 0.0)).collect();
        let (_, history) = Logistic::fit(&x, &y, [0.0, 0.1][case % 2]);
        if let Some(w) = history.windows(2).find(|w| w[1] > w[0]) {
            return Err(format!("case {case}: loss rose from {} to {}", w[0], w[1]));
        }
        if history.len() < 2 {
            return Err(format!("case {case}: no optimization step taken"));
        }
    }
    Ok(())
}
