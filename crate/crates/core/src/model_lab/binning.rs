use rayon::prelude::*;

/// Maximum number of bins per feature (bin ids fit in a `u8`).
pub const MAX_BINS: usize = 256;

/// Column-major quantized copy of a feature matrix used by the tree
/// learners. Bin `b` of feature `f` holds values `<= thresholds[f][b]`, so a
/// split "bin <= b" is the raw test `x <= thresholds[f][b]`.
///
/// Features with at most [`MAX_BINS`] distinct values are binned exactly
/// (cut points at midpoints between consecutive distinct values).
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub n_rows: usize,
    pub bins: Vec<Vec<u8>>,
    pub thresholds: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let n_rows = x.len();
        let n_cols = x.first().map_or(0, Vec::len);
        let (bins, thresholds) = (0..n_cols)
            .into_par_iter()
            .map(|f| {
                let col: Vec<f64> = x.iter().map(|r| r[f]).collect();
                let thr = cut_points(&col);
                let b = col.iter().map(|v| thr.partition_point(|t| t < v) as u8).collect();
                (b, thr)
            })
            .unzip();
        Self { n_rows, bins, thresholds }
    }

    pub fn n_features(&self) -> usize {
        self.bins.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.thresholds[feature].len() + 1
    }
}

fn cut_points(col: &[f64]) -> Vec<f64> {
    let mut sorted = col.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut uniq = sorted.clone();
    uniq.dedup();
    if uniq.len() <= MAX_BINS {
        return uniq.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let n = sorted.len();
    let mut cuts: Vec<f64> = Vec::with_capacity(MAX_BINS - 1);
    for q in 1..MAX_BINS {
        let v = sorted[(q * n / MAX_BINS).min(n - 1)];
        // all copies of v go left: cut between v and the next distinct value
        let next = uniq.partition_point(|u| *u <= v);
        if next < uniq.len() {
            let t = midpoint(v, uniq[next]);
            if cuts.last().is_none_or(|last| *last < t) {
                cuts.push(t);
            }
        }
    }
    cuts
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // guard against rounding onto b for adjacent floats
    if m >= b {
        a
    } else {
        m
    }
}
