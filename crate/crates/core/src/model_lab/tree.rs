use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;

const MIN_GAIN: f64 = 1e-12;
const MIN_HESSIAN: f64 = 1e-12;
const PAR_WORK: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
}

/// Binary tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    /// Sum of split gains per feature.
    pub fn gains(&self, n_features: usize) -> Vec<f64> {
        let mut g = vec![0.0; n_features];
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                g[*feature] += gain;
            }
        }
        g
    }
}

/// Split statistic per row.
pub(crate) enum Criterion<'a> {
    /// Binary Gini impurity; leaf value is the positive fraction.
    Gini { y: &'a [u8] },
    /// Second-order logistic-loss fit; leaf value is `-G/H`.
    Newton { grad: &'a [f64], hess: &'a [f64] },
}

impl Criterion<'_> {
    #[inline]
    fn stat(&self, row: usize) -> (f64, f64) {
        match self {
            Criterion::Gini { y } => (f64::from(y[row]), 0.0),
            Criterion::Newton { grad, hess } => (grad[row], hess[row]),
        }
    }

    /// Node objective (higher is better for Newton, impurity for Gini).
    fn score(&self, n: f64, a: f64, b: f64) -> f64 {
        match self {
            Criterion::Gini { .. } => {
                if n > 0.0 {
                    2.0 * a * (n - a) / n
                } else {
                    0.0
                }
            }
            Criterion::Newton { .. } => {
                if b > MIN_HESSIAN {
                    a * a / b
                } else {
                    0.0
                }
            }
        }
    }

    fn gain(&self, parent: [f64; 3], left: [f64; 3]) -> Option<f64> {
        let right = [parent[0] - left[0], parent[1] - left[1], parent[2] - left[2]];
        if left[0] < 1.0 || right[0] < 1.0 {
            return None;
        }
        match self {
            Criterion::Gini { .. } => Some(
                self.score(parent[0], parent[1], 0.0)
                    - self.score(left[0], left[1], 0.0)
                    - self.score(right[0], right[1], 0.0),
            ),
            Criterion::Newton { .. } => {
                if left[2] <= MIN_HESSIAN || right[2] <= MIN_HESSIAN {
                    return None;
                }
                Some(
                    self.score(0.0, left[1], left[2]) + self.score(0.0, right[1], right[2])
                        - self.score(0.0, parent[1], parent[2]),
                )
            }
        }
    }

    fn leaf_value(&self, t: [f64; 3]) -> f64 {
        match self {
            Criterion::Gini { .. } => t[1] / t[0],
            Criterion::Newton { .. } => {
                if t[2] > MIN_HESSIAN {
                    -t[1] / t[2]
                } else {
                    0.0
                }
            }
        }
    }

    fn is_pure(&self, t: [f64; 3]) -> bool {
        match self {
            Criterion::Gini { .. } => t[1] == 0.0 || t[1] == t[0],
            Criterion::Newton { .. } => false,
        }
    }
}

pub(crate) struct Builder<'a> {
    data: &'a BinnedMatrix,
    crit: Criterion<'a>,
    max_depth: usize,
    /// Features tried per split (random subset) and the RNG drawing them.
    sampler: Option<(usize, &'a mut ChaCha8Rng)>,
    nodes: Vec<Node>,
    /// Rows reaching each leaf (node index, rows), filled on request.
    leaves: Option<Vec<(usize, Vec<u32>)>>,
}

impl<'a> Builder<'a> {
    pub fn new(data: &'a BinnedMatrix, crit: Criterion<'a>, max_depth: usize) -> Self {
        Self { data, crit, max_depth, sampler: None, nodes: Vec::new(), leaves: None }
    }

    pub fn with_sampler(mut self, mtry: usize, rng: &'a mut ChaCha8Rng) -> Self {
        self.sampler = Some((mtry, rng));
        self
    }

    pub fn track_leaves(mut self) -> Self {
        self.leaves = Some(Vec::new());
        self
    }

    pub fn build(mut self, rows: &[u32]) -> (Tree, Vec<(usize, Vec<u32>)>) {
        self.grow(rows.to_vec(), 0);
        (Tree { nodes: self.nodes }, self.leaves.unwrap_or_default())
    }

    fn totals(&self, rows: &[u32]) -> [f64; 3] {
        let mut t = [0.0; 3];
        for &r in rows {
            let (a, b) = self.crit.stat(r as usize);
            t[0] += 1.0;
            t[1] += a;
            t[2] += b;
        }
        t
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.data.n_features();
        match &mut self.sampler {
            None => (0..p).collect(),
            Some((m, rng)) => {
                let mut idx: Vec<usize> = (0..p).collect();
                let m = (*m).min(p);
                for i in 0..m {
                    let j = rng.random_range(i..p);
                    idx.swap(i, j);
                }
                let mut chosen = idx[..m].to_vec();
                chosen.sort_unstable();
                chosen
            }
        }
    }

    /// Best (gain, bin) for one feature.
    fn best_for_feature(&self, f: usize, rows: &[u32], totals: [f64; 3]) -> Option<(f64, usize)> {
        let nb = self.data.n_bins(f);
        if nb < 2 {
            return None;
        }
        let bins = &self.data.bins[f];
        let mut hist = vec![[0.0f64; 3]; nb];
        for &r in rows {
            let (a, b) = self.crit.stat(r as usize);
            let h = &mut hist[bins[r as usize] as usize];
            h[0] += 1.0;
            h[1] += a;
            h[2] += b;
        }
        let mut left = [0.0; 3];
        let mut best: Option<(f64, usize)> = None;
        for (b, h) in hist.iter().enumerate().take(nb - 1) {
            left[0] += h[0];
            left[1] += h[1];
            left[2] += h[2];
            if h[0] == 0.0 {
                continue;
            }
            if let Some(g) = self.crit.gain(totals, left) {
                if best.is_none_or(|(bg, _)| g > bg) {
                    best = Some((g, b));
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<u32>, depth: usize) -> usize {
        let id = self.nodes.len();
        let totals = self.totals(&rows);
        self.nodes.push(Node::Leaf { value: self.crit.leaf_value(totals) });
        if depth >= self.max_depth || rows.len() < 2 || self.crit.is_pure(totals) {
            self.finish_leaf(id, rows);
            return id;
        }
        let features = self.candidate_features();
        let per_feature: Vec<Option<(f64, usize)>> = if rows.len() * features.len() >= PAR_WORK {
            features.par_iter().map(|&f| self.best_for_feature(f, &rows, totals)).collect()
        } else {
            features.iter().map(|&f| self.best_for_feature(f, &rows, totals)).collect()
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for (&f, cand) in features.iter().zip(per_feature) {
            if let Some((g, b)) = cand {
                if best.is_none_or(|(bg, _, _)| g > bg) {
                    best = Some((g, f, b));
                }
            }
        }
        let Some((gain, feature, bin)) = best.filter(|(g, _, _)| *g > MIN_GAIN) else {
            self.finish_leaf(id, rows);
            return id;
        };
        let bins = &self.data.bins[feature];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            rows.into_iter().partition(|&r| bins[r as usize] as usize <= bin);
        let threshold = self.data.thresholds[feature][bin];
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right, gain };
        id
    }

    fn finish_leaf(&mut self, id: usize, rows: Vec<u32>) {
        if let Some(leaves) = &mut self.leaves {
            leaves.push((id, rows));
        }
    }
}

/// Greedy Gini tree on `rows` (duplicates act as bootstrap weights).
pub(crate) fn fit_gini_tree(
    data: &BinnedMatrix,
    y: &[u8],
    rows: &[u32],
    max_depth: usize,
    sampler: Option<(usize, &mut ChaCha8Rng)>,
) -> Tree {
    let builder = Builder::new(data, Criterion::Gini { y }, max_depth);
    let builder = match sampler {
        Some((m, rng)) => builder.with_sampler(m, rng),
        None => builder,
    };
    builder.build(rows).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_feature_found_and_unused_feature_has_zero_gain() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 3) as f64, i as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let data = BinnedMatrix::new(&x);
        let rows: Vec<u32> = (0..20).collect();
        let t = fit_gini_tree(&data, &y, &rows, 3, None);
        assert_eq!(t.depth(), 1);
        let g = t.gains(2);
        assert_eq!(g[0], 0.0);
        assert!(g[1] > 0.0);
        for (r, yy) in x.iter().zip(&y) {
            assert_eq!(t.predict(r), f64::from(*yy));
        }
    }

    #[test]
    fn newton_leaf_values() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let grad = [0.5, 0.5, -0.5, -0.5];
        let hess = [0.25; 4];
        let data = BinnedMatrix::new(&x);
        let (t, leaves) =
            Builder::new(&data, Criterion::Newton { grad: &grad, hess: &hess }, 1).track_leaves().build(&[0, 1, 2, 3]);
        assert_eq!(t.predict(&[0.0]), -2.0);
        assert_eq!(t.predict(&[3.0]), 2.0);
        assert_eq!(leaves.len(), 2);
    }
}
