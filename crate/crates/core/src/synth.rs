//! Synthetic imbalanced credit-style tables for hermetic runs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::tabular::{Column, Table};

pub const SYNTH_TARGET: &str = "target";

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("imbalance must lie strictly between 0.5 and 1, got {0}")]
    BadImbalance(f64),
    #[error("need at least 100 rows, got {0}")]
    TooFewRows(usize),
    #[error("need at least one numeric feature")]
    NoNumericFeatures,
    #[error("signal strength must be finite and non-negative, got {0}")]
    BadSignal(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_rows: usize,
    pub n_numeric: usize,
    pub n_categorical: usize,
    /// Share of the majority class (label 0).
    pub imbalance: f64,
    pub signal_strength: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self { n_rows: 5000, n_numeric: 6, n_categorical: 2, imbalance: 0.78, signal_strength: 3.0, seed: 42 }
    }
}

impl SynthParams {
    pub fn generate(&self) -> Result<Table, SynthError> {
        generate_synthetic_dataset(
            self.n_rows,
            self.n_numeric,
            self.n_categorical,
            self.imbalance,
            self.signal_strength,
            self.seed,
        )
    }
}

pub fn numeric_name(j: usize) -> String {
    format!("x{}", j + 1)
}

pub fn categorical_name(j: usize) -> String {
    format!("c{}", j + 1)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Weight vector of the numeric logit; unit length, so `signal_strength` is
/// the standard deviation of the logit before the intercept.
fn weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::child(seed, seed::SYNTH, 0);
    let w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    w.into_iter().map(|v| v / norm).collect()
}

/// Intercept that makes the mean positive probability equal `rate` over a
/// calibration sample.
fn intercept(w: &[f64], signal: f64, rate: f64, seed: u64) -> f64 {
    let mut rng = seed::child(seed, seed::SYNTH, 1);
    let logits: Vec<f64> =
        (0..4000).map(|_| signal * w.iter().map(|wj| wj * rng.sample::<f64, _>(StandardNormal)).sum::<f64>()).collect();
    let mean_p = |b: f64| logits.iter().map(|z| sigmoid(z + b)).sum::<f64>() / logits.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-class category frequencies for one categorical column.
struct CategoricalSpec {
    levels: Vec<String>,
    freq: [Vec<f64>; 2],
}

fn categorical_specs(n: usize, signal: f64, seed: u64) -> Vec<CategoricalSpec> {
    let mut rng = seed::child(seed, seed::SYNTH, 2);
    (0..n)
        .map(|_| {
            let k = rng.random_range(3..=5);
            let levels = (0..k).map(|i| char::from(b'A' + i as u8).to_string()).collect();
            let base: Vec<f64> = (0..k).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            let effect: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = |v: Vec<f64>| {
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<_>>()
            };
            let f0 = norm(base.iter().map(|a| a.exp()).collect());
            let f1 = norm(base.iter().zip(&effect).map(|(a, g)| (a + 0.25 * signal * g).exp()).collect());
            CategoricalSpec { levels, freq: [f0, f1] }
        })
        .collect()
}

fn draw_level(freq: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, f) in freq.iter().enumerate() {
        acc += f;
        if u < acc {
            return i;
        }
    }
    freq.len() - 1
}

/// Numeric features are standard normal; the label is 1 with probability
/// `sigmoid(signal·w·x + b)`, `b` calibrated to the minority share. Rows are
/// drawn with class quotas (a row whose class is already full is rejected),
/// so the majority share is `round(imbalance·n)/n`. Categorical columns are
/// drawn given the label from small alphabets.
pub fn generate_synthetic_dataset(
    n_rows: usize,
    n_numeric: usize,
    n_categorical: usize,
    imbalance: f64,
    signal_strength: f64,
    seed: u64,
) -> Result<Table, SynthError> {
    if !(imbalance > 0.5 && imbalance < 1.0) {
        return Err(SynthError::BadImbalance(imbalance));
    }
    if n_rows < 100 {
        return Err(SynthError::TooFewRows(n_rows));
    }
    if n_numeric == 0 {
        return Err(SynthError::NoNumericFeatures);
    }
    if !(signal_strength >= 0.0 && signal_strength.is_finite()) {
        return Err(SynthError::BadSignal(signal_strength));
    }
    let w = weights(n_numeric, seed);
    let b = intercept(&w, signal_strength, 1.0 - imbalance, seed);
    let cats = categorical_specs(n_categorical, signal_strength, seed);

    let quota0 = (imbalance * n_rows as f64).round() as usize;
    let mut left = [quota0, n_rows - quota0];
    let mut numeric: Vec<Vec<f64>> = vec![Vec::with_capacity(n_rows); n_numeric];
    let mut labels = Vec::with_capacity(n_rows);
    let mut rng = seed::stream(seed, seed::SYNTH);
    let mut x = vec![0.0; n_numeric];
    while labels.len() < n_rows {
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let z: f64 = signal_strength * w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b;
        let y = usize::from(rng.random::<f64>() < sigmoid(z));
        if left[y] == 0 {
            continue;
        }
        left[y] -= 1;
        for (col, v) in numeric.iter_mut().zip(&x) {
            col.push(*v);
        }
        labels.push(y);
    }

    let mut crng = seed::child(seed, seed::SYNTH, 3);
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (j, col) in numeric.into_iter().enumerate() {
        names.push(numeric_name(j));
        columns.push(Column::Numeric(col));
    }
    for (j, spec) in cats.iter().enumerate() {
        let values = labels.iter().map(|&y| Some(spec.levels[draw_level(&spec.freq[y], &mut crng)].clone())).collect();
        names.push(categorical_name(j));
        columns.push(Column::Text(values));
    }
    names.push(SYNTH_TARGET.to_string());
    columns.push(Column::Numeric(labels.iter().map(|&y| y as f64).collect()));
    Ok(Table::new(names, columns).expect("columns have equal length"))
}

/// Numeric features whose weight carries at least a fair share of the logit.
pub fn informative_features(n_numeric: usize, seed: u64) -> Vec<String> {
    let w = weights(n_numeric, seed);
    let share = 1.0 / (n_numeric as f64).sqrt();
    w.iter().enumerate().filter(|(_, v)| v.abs() >= 0.5 * share).map(|(j, _)| numeric_name(j)).collect()
}
