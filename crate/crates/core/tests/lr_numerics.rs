mod oracles;

use proptest::prelude::*;

use crewlab_core::model_lab::Boosting;

#[test]
fn gradient_matches_finite_differences() {
    oracles::lr_gradient_check(60).unwrap();
}

#[test]
fn training_loss_never_rises() {
    oracles::lr_loss_monotone(20).unwrap();
}

proptest! {
    #[test]
    fn boosting_loss_path_is_monotone(
        rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0u8..2), 10..60),
        depth in 1usize..4,
        lr in 0.05f64..1.0,
    ) {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0, r.1]).collect();
        let y: Vec<u8> = rows.iter().map(|r| r.2).collect();
        let prior = Boosting::fit(&x, &y, lr, depth, 0);
        let p = prior.score(&x[0]);
        let mean = y.iter().map(|&v| f64::from(v)).sum::<f64>() / y.len() as f64;
        prop_assert!(x.iter().all(|r| prior.score(r) == p));
        prop_assert!((p - mean.clamp(1e-6, 1.0 - 1e-6)).abs() < 1e-9);
        let path = Boosting::fit(&x, &y, lr, depth, 8).loss_path(&x, &y);
        prop_assert!(path.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", path);
    }
}
