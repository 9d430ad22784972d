//! Benchmark-only crate; see `benches/`.

use crewlab_core::synth::SynthParams;
use crewlab_core::tabular::{Column, Table};

/// A synthetic numeric dataset with `n_rows` rows and a `target` column.
pub fn numeric_table(n_rows: usize, seed: u64) -> Table {
    SynthParams { n_rows, n_numeric: 6, n_categorical: 0, seed, ..SynthParams::default() }
        .generate()
        .expect("valid synthetic parameters")
}

/// Blanks every `stride`-th cell of the numeric feature columns.
pub fn with_gaps(table: &Table, stride: usize) -> Table {
    let mut k = 0usize;
    let cols = table
        .column_names()
        .iter()
        .zip(table.columns())
        .map(|(name, col)| match col {
            Column::Numeric(v) if name != "target" => Column::Numeric(
                v.iter()
                    .map(|&x| {
                        k += 1;
                        if k % stride == 0 {
                            f64::NAN
                        } else {
                            x
                        }
                    })
                    .collect(),
            ),
            other => other.clone(),
        })
        .collect();
    Table::new(table.column_names().to_vec(), cols).expect("same shape")
}
