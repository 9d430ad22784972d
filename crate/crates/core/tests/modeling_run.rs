use std::path::Path;

use crewlab_core::gateway::{Gateway, ScriptedBackend};
use crewlab_core::modeling::{files, run_recipe, FeReport, Recipe, STAGES};
use crewlab_core::synth::SynthParams;

fn small_recipe(dir: &Path) -> Recipe {
    let params = SynthParams { n_rows: 600, n_numeric: 4, n_categorical: 2, seed: 11, ..SynthParams::default() };
    Recipe::synthetic(params, dir)
}

fn run(dir: &Path) -> (String, usize, usize) {
    let gw = Gateway::new(Box::new(ScriptedBackend::new()));
    let out = run_recipe(&small_recipe(dir), &gw, 7).unwrap();
    assert!(!out.crew_output.failed);
    (out.documentation, gw.calls(), gw.network_calls())
}

#[test]
fn synthetic_recipe_documents_every_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let (doc, calls, network) = run(tmp.path());
    assert_eq!(network, 0);
    // manager delegate + worker tool + worker answer + manager answer, per task
    assert_eq!(calls, 7 * 4);
    for stage in STAGES {
        assert!(doc.contains(&format!("## {stage}\n")), "missing {stage}");
    }
    assert!(doc.contains("learning_rate") || doc.contains("l2") || doc.contains("max_depth"));

    let fe: FeReport =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join(files::FE_REPORT)).unwrap()).unwrap();
    for step in &fe.steps {
        assert!(doc.contains(&step.detail), "step not documented: {}", step.detail);
    }
    assert!(fe.steps.iter().any(|s| s.name == "label-encoding"));
    assert!(fe.steps.iter().any(|s| s.name == "smote"));
    for f in [files::MODEL, files::METRICS, files::TRAIN2, files::TEST2, files::REPORT, files::CREW_OUTPUT] {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn same_seed_same_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (doc_a, ..) = run(a.path());
    let (doc_b, ..) = run(b.path());
    assert_eq!(doc_a, doc_b);
    for f in [files::MODEL, files::METRICS, files::TRAIN2, files::HYPERPARAMS] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let body = |p: &Path| {
        let t = std::fs::read_to_string(p.join(files::CREW_OUTPUT)).unwrap();
        t.lines().skip(1).map(str::to_string).collect::<Vec<_>>()
    };
    assert_eq!(body(a.path()), body(b.path()));
}
