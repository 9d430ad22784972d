mod oracles;

use proptest::prelude::*;

use crewlab_core::tabular::{knn_impute, Column, Table};

#[test]
fn imputation_matches_brute_force() {
    oracles::knn_oracle(50).unwrap();
}

fn column_with_gaps(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![4 => (-50i32..50).prop_map(f64::from), 1 => Just(f64::NAN)], n)
}

proptest! {
    #[test]
    fn present_cells_are_untouched(
        (a, b) in (8usize..30).prop_flat_map(|n| (column_with_gaps(n), column_with_gaps(n))),
        k in 1usize..4,
    ) {
        let t = Table::new(vec!["a".into(), "b".into()], vec![Column::Numeric(a.clone()), Column::Numeric(b.clone())]).unwrap();
        let Ok(out) = knn_impute(&t, &t, k, &[]) else { return Ok(()) };
        for (name, before) in [("a", &a), ("b", &b)] {
            let after = out.numeric(name).unwrap();
            for (x, y) in before.iter().zip(after) {
                prop_assert!(!y.is_nan());
                if !x.is_nan() {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
