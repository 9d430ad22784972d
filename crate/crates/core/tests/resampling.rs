mod oracles;

use proptest::prelude::*;

use crewlab_core::tabular::{random_downsample, smote, train_test_split, Column, Table};

#[test]
fn smote_rows_are_convex_combinations() {
    oracles::smote_invariants(100).unwrap();
}

#[test]
fn downsample_keeps_twice_the_minority() {
    oracles::downsample_invariants(100).unwrap();
}

fn ids_table(n: usize, n_pos: usize) -> Table {
    Table::new(
        vec!["id".into(), "y".into()],
        vec![
            Column::Numeric((0..n).map(|i| i as f64).collect()),
            Column::Numeric((0..n).map(|i| f64::from(u8::from(i < n_pos))).collect()),
        ],
    )
    .unwrap()
}

proptest! {
    #[test]
    fn split_conserves_rows(n in 10usize..200, ratio in 0.2f64..0.9, seed in any::<u64>()) {
        let t = ids_table(n, n / 3);
        let (train, test) = train_test_split(&t, ratio, seed).unwrap();
        let mut ids: Vec<f64> = train.numeric("id").unwrap().iter().chain(test.numeric("id").unwrap()).copied().collect();
        ids.sort_by(f64::total_cmp);
        prop_assert_eq!(ids, (0..n).map(|i| i as f64).collect::<Vec<_>>());
        let again = train_test_split(&t, ratio, seed).unwrap();
        prop_assert_eq!(again.0.numeric("id").unwrap(), train.numeric("id").unwrap());
    }

    #[test]
    fn downsample_preserves_order(n in 4usize..80, frac in 0.05f64..0.5, seed in any::<u64>()) {
        let n_pos = ((n as f64 * frac) as usize).max(1);
        let out = random_downsample(&ids_table(n, n_pos), "y", seed).unwrap();
        let ids = out.numeric("id").unwrap();
        prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ids[..n_pos].iter().enumerate().all(|(i, &v)| v == i as f64));
    }

    #[test]
    fn smote_balances(n in 6usize..50, seed in any::<u64>()) {
        let n_pos = (n / 4).max(2);
        let out = smote(&ids_table(n, n_pos), "y", 3, seed).unwrap();
        let y = out.binary_labels("y").unwrap();
        prop_assert_eq!(y.iter().filter(|&&v| v == 1).count() * 2, y.len());
    }
}
