//! L2-regularized logistic regression on standardized features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sigmoid;

pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 5000;
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Coefficients on the standardized features.
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub l2: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Mean log-loss plus `(l2 / 2) * ||w||^2` over parameters `[w.., b]`
/// (the intercept is not penalized).
pub struct Objective<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    l2: f64,
}

impl<'a> Objective<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [u8], l2: f64) -> Self {
        Self { x, y, l2 }
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len) + 1
    }

    fn margin(theta: &[f64], row: &[f64]) -> f64 {
        let p = row.len();
        theta[p] + row.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>()
    }

    fn penalty(&self, theta: &[f64]) -> f64 {
        let p = theta.len() - 1;
        0.5 * self.l2 * theta[..p].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        // fixed chunking keeps the summation order independent of threads
        let parts: Vec<f64> = self
            .x
            .par_chunks(CHUNK)
            .zip(self.y.par_chunks(CHUNK))
            .map(|(xs, ys)| {
                xs.iter()
                    .zip(ys)
                    .map(|(row, &t)| {
                        let f = Self::margin(theta, row);
                        let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
                        softplus - f64::from(t) * f
                    })
                    .sum::<f64>()
            })
            .collect();
        parts.iter().sum::<f64>() / self.x.len() as f64 + self.penalty(theta)
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = theta.len();
        let parts: Vec<Vec<f64>> = self
            .x
            .par_chunks(CHUNK)
            .zip(self.y.par_chunks(CHUNK))
            .map(|(xs, ys)| {
                let mut g = vec![0.0; d];
                for (row, &t) in xs.iter().zip(ys) {
                    let r = sigmoid(Self::margin(theta, row)) - f64::from(t);
                    for (gj, xj) in g.iter_mut().zip(row) {
                        *gj += r * xj;
                    }
                    g[d - 1] += r;
                }
                g
            })
            .collect();
        let n = self.x.len() as f64;
        let mut g = vec![0.0; d];
        for part in parts {
            for (a, b) in g.iter_mut().zip(part) {
                *a += b;
            }
        }
        for (j, gj) in g.iter_mut().enumerate() {
            *gj /= n;
            if j < d - 1 {
                *gj += self.l2 * theta[j];
            }
        }
        g
    }
}

/// Column means and standard deviations (population; constant columns get 1).
pub fn standardization(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let p = x.first().map_or(0, Vec::len);
    let n = x.len() as f64;
    let mut mean = vec![0.0; p];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; p];
    for row in x {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

pub fn standardize(x: &[Vec<f64>], mean: &[f64], scale: &[f64]) -> Vec<Vec<f64>> {
    x.iter().map(|row| row.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()).collect()
}

impl Logistic {
    /// Gradient descent with Armijo backtracking; returns the model and the
    /// objective value before the first step and after every accepted step.
    pub fn fit(x: &[Vec<f64>], y: &[u8], l2: f64) -> (Logistic, Vec<f64>) {
        let (mean, scale) = standardization(x);
        let xs = standardize(x, &mean, &scale);
        let obj = Objective::new(&xs, y, l2);
        let d = obj.dim();
        let mut theta = vec![0.0; d];
        let mut loss = obj.value(&theta);
        let mut history = vec![loss];
        let mut step: f64 = 1.0;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            let g = obj.gradient(&theta);
            let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if gmax < GRADIENT_TOLERANCE {
                converged = true;
                break;
            }
            let gg: f64 = g.iter().map(|v| v * v).sum();
            step = (step * 2.0).min(1e3);
            let accepted = loop {
                let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, gj)| t - step * gj).collect();
                let l = obj.value(&cand);
                if l <= loss - ARMIJO_C * step * gg {
                    break Some((cand, l));
                }
                step *= 0.5;
                if step < MIN_STEP {
                    break None;
                }
            };
            iterations += 1;
            let Some((cand, l)) = accepted else {
                // no decrease representable in floating point
                converged = true;
                break;
            };
            theta = cand;
            loss = l;
            history.push(loss);
        }
        let p = d - 1;
        let model = Logistic { mean, scale, coef: theta[..p].to_vec(), intercept: theta[p], l2, iterations, converged };
        (model, history)
    }

    pub fn logit(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .zip(&self.coef)
                .map(|(((v, m), s), w)| w * (v - m) / s)
                .sum::<f64>()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.logit(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_vanishes_at_optimum() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 7) % 11) as f64]).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from((i * 3) % 5 > 1)).collect();
        let (m, hist) = Logistic::fit(&x, &y, 0.1);
        assert!(m.converged);
        for w in hist.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn constant_column_gets_unit_scale() {
        let (mean, scale) = standardization(&[vec![3.0], vec![3.0]]);
        assert_eq!(mean, vec![3.0]);
        assert_eq!(scale, vec![1.0]);
    }
}
