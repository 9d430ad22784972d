use rand::seq::SliceRandom;

use super::{Result, Table, TabularError};
use crate::seed;

/// Shuffles rows with the `split` substream and puts the first
/// `floor(ratio * n)` into train.
pub fn train_test_split(table: &Table, ratio: f64, seed: u64) -> Result<(Table, Table)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(TabularError::BadRatio(ratio));
    }
    let n = table.n_rows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::stream(seed, seed::SPLIT));
    let n_train = (ratio * n as f64).floor() as usize;
    Ok((table.select_rows(&idx[..n_train]), table.select_rows(&idx[n_train..])))
}
