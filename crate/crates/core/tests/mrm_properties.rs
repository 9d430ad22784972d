use std::path::Path;

use proptest::prelude::*;

use crewlab_core::model_lab::{fit, save_model, Family, HyperValue, Hyperparams};
use crewlab_core::modeling::{evaluate_table, STAGES};
use crewlab_core::mrm::{
    check_compliance_text, numeric_feature_columns, perturb_outliers, perturb_shifted, replicate_model, PerturbMode,
    ReplicationVerdict, DEFAULT_GUIDE, SAME_ENGINE_TOLERANCE,
};
use crewlab_core::synth::SynthParams;
use crewlab_core::tabular::{train_test_split, write_csv, Column, Table};

/// Two continuous columns, a 0/1 flag, an encoded categorical and the target.
fn mixed_table(rows: &[(f64, f64, u8, u8, u8)]) -> Table {
    Table::new(
        ["x1", "x2", "flag", "c1", "y"].map(String::from).to_vec(),
        vec![
            Column::Numeric(rows.iter().map(|r| r.0).collect()),
            Column::Numeric(rows.iter().map(|r| r.1).collect()),
            Column::Numeric(rows.iter().map(|r| f64::from(r.2)).collect()),
            Column::Numeric(rows.iter().map(|r| f64::from(r.3)).collect()),
            Column::Numeric(rows.iter().map(|r| f64::from(r.4)).collect()),
        ],
    )
    .unwrap()
}

fn rows() -> impl Strategy<Value = Vec<(f64, f64, u8, u8, u8)>> {
    prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0, 0u8..2, 0u8..3, 0u8..2), 12..60)
}

fn same_bits(a: &Table, b: &Table, col: &str) -> bool {
    let (a, b) = (a.numeric(col).unwrap(), b.numeric(col).unwrap());
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #[test]
    fn perturbation_leaves_categorical_and_target_alone(
        data in rows(),
        mode in prop::sample::select(vec![PerturbMode::AddFixed, PerturbMode::AddRandom, PerturbMode::MultiplyFixed]),
        c in 0.1f64..3.0,
        seed in any::<u64>(),
    ) {
        let t = mixed_table(&data);
        let numeric = numeric_feature_columns(&t, None, "y", &["c1".to_string()]).unwrap();
        prop_assert!(numeric.iter().all(|n| n == "x1" || n == "x2"));
        prop_assume!(!numeric.is_empty());
        let shifted = perturb_shifted(&t, &numeric, mode, c, seed).unwrap();
        let rows_hit: Vec<usize> = (0..data.len()).step_by(5).collect();
        let outliers = perturb_outliers(&t, &numeric, &rows_hit, 1000.0).unwrap();
        for col in ["flag", "c1", "y"] {
            prop_assert!(same_bits(&t, &shifted, col), "{} changed by shift", col);
            prop_assert!(same_bits(&t, &outliers, col), "{} changed by outliers", col);
        }
        let again = perturb_shifted(&t, &numeric, mode, c, seed).unwrap();
        for col in &numeric {
            prop_assert!(same_bits(&shifted, &again, col));
        }
    }

    #[test]
    fn outliers_move_accuracy_by_at_most_rows_over_n(
        data in rows(),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..4),
        magnitude in prop_oneof![Just(1000.0), -50.0f64..50.0],
    ) {
        let t = mixed_table(&data);
        let y: Vec<f64> = t.numeric("y").unwrap().to_vec();
        prop_assume!(y.contains(&1.0) && y.contains(&0.0));
        let (names, x, _) = t.features_and_labels("y").unwrap();
        let est = fit(Family::DecisionTree, &Hyperparams::default(), &names, &x, &y, 1).unwrap();
        let rows_hit: Vec<usize> = picks.iter().map(|i| i.index(data.len())).collect();
        let numeric = vec!["x1".to_string(), "x2".to_string()];
        let out = perturb_outliers(&t, &numeric, &rows_hit, magnitude).unwrap();
        let base = evaluate_table(&est, &t, "y").unwrap().accuracy;
        let after = evaluate_table(&est, &out, "y").unwrap().accuracy;
        prop_assert!((after - base).abs() <= rows_hit.len() as f64 / data.len() as f64 + 1e-12);
    }

    #[test]
    fn adding_a_stage_section_only_helps(present in prop::collection::vec(any::<bool>(), 6), add in 0usize..6) {
        prop_assume!(!present[add]);
        let doc = |with: &dyn Fn(usize) -> bool| {
            let mut s = String::from("# Technical Documentation\n\n");
            for (i, stage) in STAGES.iter().enumerate() {
                if with(i) {
                    s.push_str(&format!("## {stage}\n\nThe {} step was carried out.\n\n", stage.to_lowercase()));
                }
            }
            s
        };
        let before = check_compliance_text(&doc(&|i| present[i]), DEFAULT_GUIDE).unwrap();
        let after = check_compliance_text(&doc(&|i| present[i] || i == add), DEFAULT_GUIDE).unwrap();
        for (i, (b, a)) in before.stages.iter().zip(&after.stages).enumerate() {
            if i == add {
                prop_assert!(!b.pass);
            } else {
                prop_assert_eq!(b.pass, a.pass);
            }
        }
        prop_assert!(after.gaps.len() <= before.gaps.len());
    }
}

fn numeric_split(dir: &Path, seed: u64) {
    let params = SynthParams { n_rows: 400, n_numeric: 4, n_categorical: 0, seed, ..SynthParams::default() };
    let (train, test) = train_test_split(&params.generate().unwrap(), 0.8, seed).unwrap();
    write_csv(&train, dir.join("train2.csv")).unwrap();
    write_csv(&test, dir.join("test2.csv")).unwrap();
}

#[test]
fn replication_is_a_fixed_point() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for (seed, family) in [(1, Family::DecisionTree), (2, Family::RandomForest), (3, Family::LogisticRegression)] {
        numeric_split(d, seed);
        let hp = match family {
            Family::RandomForest => Hyperparams::from_pairs([("n_estimators".to_string(), HyperValue::Int(20))]),
            _ => Hyperparams::default(),
        };
        let train = crewlab_core::tabular::load_csv(d.join("train2.csv")).unwrap();
        let test = crewlab_core::tabular::load_csv(d.join("test2.csv")).unwrap();
        let (names, x, y) = train.features_and_labels("target").unwrap();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let est = fit(family, &hp, &names, &x, &y, seed).unwrap();
        save_model(&est, &d.join("model.json")).unwrap();
        let reference = evaluate_table(&est, &test, "target").unwrap();
        let run = |r| {
            replicate_model(
                &d.join("train2.csv"),
                &d.join("test2.csv"),
                "target",
                family,
                &hp,
                r,
                seed,
                SAME_ENGINE_TOLERANCE,
            )
            .unwrap()
        };
        let first = run(&reference);
        assert_eq!(first.verdict, ReplicationVerdict::Replicated);
        assert!(first.deltas.values().all(|v| *v == 0.0), "{:?}", first.deltas);
        let second = run(&reference);
        assert_eq!(first.replicated, second.replicated);
    }
}
