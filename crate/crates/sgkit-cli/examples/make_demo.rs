//! Generate a self-contained demo directory for the `sgkit` binary:
//! a scripted scenario (ground truth, canned predictions, captions,
//! scene scripts, manifest), a distillation features fixture, and a
//! `run.json` wired to all of it.
//!
//! ```text
//! cargo run -p sgkit-cli --example make_demo [-- <dir>]   # default: demo
//! sgkit evaluate --config <dir>/run.json
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use sgkit::fixture::{save_fixture, Fixture};
use sgkit::scenario::{build_scenario, write_scenario, ScenarioSpec};
use sgkit::scene_model::seeded_rng;
use sgkit::EmbeddingMatrix;

const RUN_CONFIG: &str = r#"{
  "seed": 7,
  "out_dir": "out",
  "paths": {
    "ground_truth": "ground_truth.json",
    "predictions": "predictions.json",
    "captions": "captions.tsv",
    "scenes_dir": "scenes",
    "manifest": "manifest.json",
    "features": "features.json"
  },
  "select_queries": {"k": 6, "l": 3, "gamma": 0.5, "dim": 16, "n_tokens": 24},
  "eval": {"ks": [1, 2, 5, 20, 50, 100]},
  "gradcheck": {"instances": 25}
}
"#;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));

    let spec = ScenarioSpec {
        seed: 42,
        n_images: 6,
        ..ScenarioSpec::default()
    };
    let scenario = build_scenario(&spec).expect("demo scenario builds");
    write_scenario(&scenario, &dir).expect("demo scenario writes");

    // Two student/teacher edge-feature sets for distill-check: the
    // student is the teacher plus per-entry noise; the first set also
    // carries an explicit negative mask (column of 0/1 flags).
    let mut rng = seeded_rng(spec.seed, "demo:features");
    let mut embeddings = BTreeMap::new();
    for set in 0..2usize {
        let rows = 4 + set;
        let dim = 6;
        let teacher: Vec<f64> = (0..rows * dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let student: Vec<f64> = teacher
            .iter()
            .map(|t| t + rng.random_range(-0.2..0.2))
            .collect();
        embeddings.insert(
            format!("student_edges_{set}"),
            EmbeddingMatrix::from_flat(rows, dim, student).expect("student matrix"),
        );
        embeddings.insert(
            format!("teacher_edges_{set}"),
            EmbeddingMatrix::from_flat(rows, dim, teacher).expect("teacher matrix"),
        );
    }
    let mask: Vec<f64> = vec![1.0, 0.0, 1.0, 1.0];
    embeddings.insert(
        "negative_mask_0".into(),
        EmbeddingMatrix::from_flat(4, 1, mask).expect("mask matrix"),
    );
    let features = Fixture {
        vocabulary: scenario.vocabulary.clone(),
        graphs: Vec::new(),
        embeddings,
    };
    save_fixture(dir.join("features.json"), &features).expect("features fixture writes");

    std::fs::write(dir.join("run.json"), RUN_CONFIG).expect("run config writes");

    println!("demo assets written to {}", dir.display());
    println!("try:");
    for command in [
        "generate-targets",
        "select-queries",
        "match",
        "distill-check",
        "gradcheck",
        "evaluate",
    ] {
        println!(
            "  cargo run -p sgkit-cli --bin sgkit -- {command} --config {}/run.json",
            dir.display()
        );
    }
}
