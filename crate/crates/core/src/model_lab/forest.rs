use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use super::tree::{fit_gini_tree, Tree};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Bootstrap-aggregated Gini trees with `floor(sqrt(p))` features tried
    /// per split. Tree `i` draws from its own child stream, so the result does
    /// not depend on thread scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_estimators: usize, max_depth: usize, seed: u64) -> Forest {
        let data = BinnedMatrix::new(x);
        let n = x.len();
        let p = data.n_features();
        let mtry = ((p as f64).sqrt().floor() as usize).max(1);
        let trees = (0..n_estimators)
            .into_par_iter()
            .map(|i| {
                let mut rng = seed::child(seed, seed::FOREST, i as u64);
                let rows: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
                fit_gini_tree(&data, y, &rows, max_depth, Some((mtry, &mut rng)))
            })
            .collect();
        Forest { trees }
    }

    /// Mean of the trees' positive-class fractions.
    pub fn score(&self, row: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn gains(&self, n_features: usize) -> Vec<f64> {
        let mut g = vec![0.0; n_features];
        for t in &self.trees {
            for (acc, v) in g.iter_mut().zip(t.gains(n_features)) {
                *acc += v;
            }
        }
        g
    }
}
