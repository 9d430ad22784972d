use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use super::sigmoid;
use super::tree::{Builder, Criterion, Node, Tree};

const PRIOR_CLAMP: f64 = 1e-6;
const MAX_HALVINGS: usize = 60;

/// Logistic-loss gradient-boosted trees. Leaf values already include the
/// learning-rate shrinkage, so a score is `sigmoid(prior + sum of leaves)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosting {
    pub prior: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

/// Per-row logistic loss on the raw margin.
fn row_loss(y: u8, f: f64) -> f64 {
    let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
    softplus - f64::from(y) * f
}

impl Boosting {
    pub fn fit(x: &[Vec<f64>], y: &[u8], learning_rate: f64, max_depth: usize, n_estimators: usize) -> Boosting {
        let n = x.len();
        let mean = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
        let p0 = mean.clamp(PRIOR_CLAMP, 1.0 - PRIOR_CLAMP);
        let prior = (p0 / (1.0 - p0)).ln();
        let mut margin = vec![prior; n];
        let mut trees = Vec::with_capacity(n_estimators);
        let data = if n_estimators > 0 { Some(BinnedMatrix::new(x)) } else { None };
        let rows: Vec<u32> = (0..n as u32).collect();
        for _ in 0..n_estimators {
            let data = data.as_ref().unwrap();
            let (grad, hess): (Vec<f64>, Vec<f64>) = margin
                .iter()
                .zip(y)
                .map(|(&f, &t)| {
                    let p = sigmoid(f);
                    (p - f64::from(t), p * (1.0 - p))
                })
                .unzip();
            let (mut tree, leaves) = Builder::new(data, Criterion::Newton { grad: &grad, hess: &hess }, max_depth)
                .track_leaves()
                .build(&rows);
            // Shrink each leaf, then halve it until its rows' loss does not rise.
            for (id, leaf_rows) in leaves {
                let Node::Leaf { value } = tree.nodes[id] else { unreachable!() };
                let before: f64 = leaf_rows.iter().map(|&r| row_loss(y[r as usize], margin[r as usize])).sum();
                let mut step = learning_rate * value;
                let mut accepted = 0.0;
                for _ in 0..MAX_HALVINGS {
                    if step == 0.0 || !step.is_finite() {
                        break;
                    }
                    let after: f64 =
                        leaf_rows.iter().map(|&r| row_loss(y[r as usize], margin[r as usize] + step)).sum();
                    if after <= before {
                        accepted = step;
                        break;
                    }
                    step *= 0.5;
                }
                tree.nodes[id] = Node::Leaf { value: accepted };
                for &r in &leaf_rows {
                    margin[r as usize] += accepted;
                }
            }
            trees.push(tree);
        }
        Boosting { prior, learning_rate, trees }
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.prior + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }

    /// Training log-loss after 0, 1, ..., n trees.
    pub fn loss_path(&self, x: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
        let mut margin = vec![self.prior; x.len()];
        let mean = |m: &[f64]| m.iter().zip(y).map(|(&f, &t)| row_loss(t, f)).sum::<f64>() / y.len() as f64;
        let mut path = vec![mean(&margin)];
        for t in &self.trees {
            for (m, row) in margin.iter_mut().zip(x) {
                *m += t.predict(row);
            }
            path.push(mean(&margin));
        }
        path
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_never_increases() {
        let x: Vec<Vec<f64>> = (0..300).map(|i| vec![(i % 17) as f64, ((i * 31) % 23) as f64]).collect();
        let y: Vec<u8> = (0..300).map(|i| u8::from((i % 17) + ((i * 31) % 23) % 5 > 10)).collect();
        let b = Boosting::fit(&x, &y, 0.3, 3, 40);
        let path = b.loss_path(&x, &y);
        for w in path.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        assert!(path.last().unwrap() < &path[0]);
    }

    #[test]
    fn no_trees_is_prior() {
        let x = vec![vec![0.0]; 4];
        let y = [1, 0, 0, 0];
        let b = Boosting::fit(&x, &y, 0.1, 3, 0);
        assert!((b.score(&[5.0]) - 0.25).abs() < 1e-12);
    }
}
