//! Release acceptance suite: ten gates, one test per gate.
//!
//! Each test prints exactly one `[PASS]`/`[FAIL]` line naming its
//! criterion (run with `--nocapture` to see the lines as they happen;
//! cargo replays the captured output of any failing test). A gate
//! collects every problem it finds before rendering its verdict, so a
//! failure message carries the full picture rather than the first
//! broken assert.

// Threshold checks are written in negated form (`!(x > t)`) on purpose:
// a NaN produced anywhere must register as a failure, never slip through
// an ordinary comparison that is false for unordered values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use rand::Rng;
use serde_json::Value;
use sgkit::assignment::{hungarian, CostMatrix};
use sgkit::descent::{smoke_descent, DescentConfig};
use sgkit::distillation::{rrd_loss, vrd_loss, EdgeFeatureSet};
use sgkit::metrics::{evaluate, EvalConfig};
use sgkit::query_selection::{interaction_select, relevance_scores, top_k, SelectionConfig};
use sgkit::scenario::{build_scenario, write_scenario, ScenarioSpec};
use sgkit::scene_model::seeded_rng;
use sgkit::target_gen::{build_prompts, CaptionTriplet, CounterActionTable};
use sgkit::EmbeddingMatrix;
use sgkit_cli::gradsuite::{run_suite, SuiteSettings, OPS};

/// Print the one verdict line for a criterion, then fail the test with
/// every recorded problem if any.
fn verdict(criterion: usize, what: &str, problems: &[String]) {
    let tag = if problems.is_empty() { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {criterion} — {what}");
    assert!(
        problems.is_empty(),
        "criterion {criterion} failed:\n  {}",
        problems.join("\n  ")
    );
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_matrix(rows: usize, dim: usize, rng: &mut impl Rng) -> EmbeddingMatrix {
    let data: Vec<f64> = (0..rows * dim)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    EmbeddingMatrix::from_flat(rows, dim, data).expect("random matrix is valid")
}

/// Visit every permutation of `{0, …, n−1}` (Heap's algorithm).
fn for_each_permutation(n: usize, visit: &mut impl FnMut(&[usize])) {
    fn heap(k: usize, a: &mut [usize], visit: &mut impl FnMut(&[usize])) {
        if k <= 1 {
            visit(a);
            return;
        }
        for i in 0..k {
            heap(k - 1, a, visit);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    heap(n, &mut a, visit);
}

fn sgkit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgkit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("read {path:?}: {e}"));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parse {path:?}: {e}"))
}

/// Exact-assignment gate: on 500 random square matrices with n ≤ 7, the
/// Hungarian solver's total cost must equal the exhaustive minimum over
/// all n! permutations, and finish inside 10 seconds.
#[test]
fn criterion_01_hungarian_matches_exhaustive_search() {
    let started = Instant::now();
    let mut rng = seeded_rng(1001, "acceptance:hungarian");
    let mut problems = Vec::new();
    for case in 0..500 {
        let n = rng.random_range(1..=7);
        let cost =
            CostMatrix::from_fn(n, n, |_, _| rng.random_range(-10.0..10.0)).expect("finite costs");
        let matching = hungarian(&cost);

        // The solver sums matched cells in ascending-row order; summing
        // the oracle the same way makes equal assignments produce equal
        // floats, so the comparison below can be exact.
        let mut best = f64::INFINITY;
        for_each_permutation(n, &mut |perm| {
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost.at(i, j)).sum();
            if total < best {
                best = total;
            }
        });

        if matching.total_cost != best {
            problems.push(format!(
                "case {case}: n={n}, solver cost {} ≠ exhaustive minimum {best}",
                matching.total_cost
            ));
        }
        let rows: BTreeSet<usize> = matching.pairs.iter().map(|&(i, _)| i).collect();
        let cols: BTreeSet<usize> = matching.pairs.iter().map(|&(_, j)| j).collect();
        if matching.pairs.len() != n || rows.len() != n || cols.len() != n {
            problems.push(format!(
                "case {case}: n={n}, pairs {:?} are not a full permutation",
                matching.pairs
            ));
        }
        if problems.len() > 5 {
            break;
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs_f64() >= 10.0 {
        problems.push(format!("took {elapsed:.2?}, budget is 10s"));
    }
    verdict(
        1,
        "Hungarian total cost equals the exhaustive optimum on 500 random matrices (n ≤ 7) within 10s",
        &problems,
    );
}

/// Gradient gate: the analytic gradient of every differentiable loss
/// must agree with central finite differences to a relative error of
/// 1e-4 over 100 random instances per operation, inside 30 seconds.
#[test]
fn criterion_02_analytic_gradients_match_finite_differences() {
    let started = Instant::now();
    let settings = SuiteSettings::default();
    let outcomes = run_suite(2025, &settings).expect("suite runs");
    let mut problems = Vec::new();

    let names: Vec<&str> = outcomes.iter().map(|o| o.op).collect();
    if names != OPS {
        problems.push(format!("expected ops {OPS:?}, got {names:?}"));
    }
    for outcome in &outcomes {
        if !outcome.passed
            || outcome.instances != settings.instances
            || !(outcome.max_rel_error <= settings.tolerance)
        {
            problems.push(format!(
                "{}: passed={}, instances={}, max relative error {:e} (tolerance {:e})",
                outcome.op,
                outcome.passed,
                outcome.instances,
                outcome.max_rel_error,
                settings.tolerance
            ));
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs_f64() >= 30.0 {
        problems.push(format!("took {elapsed:.2?}, budget is 30s"));
    }
    verdict(
        2,
        "all seven loss gradients agree with central differences to 1e-4 over 100 instances each within 30s",
        &problems,
    );
}

/// Blend-boundary gate: at γ = 1 the relevance score must reduce to the
/// pure object similarity and at γ = 0 to the pure relation similarity,
/// bit for bit, so the top-K selections coincide exactly.
#[test]
fn criterion_03_gamma_boundaries_reduce_to_pure_selections() {
    let mut rng = seeded_rng(1003, "acceptance:gamma");
    let mut problems = Vec::new();
    for case in 0..100 {
        let rows = rng.random_range(1..=20);
        let dim = rng.random_range(2..=6);
        let k = rng.random_range(1..=rows);
        let visual = random_matrix(rows, dim, &mut rng);
        let t_obj = random_matrix(rng.random_range(1..=5), dim, &mut rng);
        let t_rel = random_matrix(rng.random_range(1..=5), dim, &mut rng);

        let pure = |classes: &EmbeddingMatrix| -> Vec<f64> {
            (0..visual.rows())
                .map(|i| {
                    let v = visual.row(i);
                    let mut best = f64::NEG_INFINITY;
                    for c in 0..classes.rows() {
                        best = best.max(dot(v, classes.row(c)));
                    }
                    best
                })
                .collect()
        };

        for (gamma, classes, name) in [(1.0, &t_obj, "object"), (0.0, &t_rel, "relation")] {
            let blended = relevance_scores(&visual, &t_obj, &t_rel, gamma).expect("scores");
            let reference = pure(classes);
            if blended != reference {
                problems.push(format!(
                    "case {case}: γ={gamma} scores differ from pure {name} similarities"
                ));
                continue;
            }
            let from_blend = top_k(&blended, k).expect("top-k");
            let from_pure = top_k(&reference, k).expect("top-k");
            if from_blend != from_pure {
                problems.push(format!(
                    "case {case}: γ={gamma} top-{k} {from_blend:?} ≠ pure {name} top-{k} {from_pure:?}"
                ));
            }
        }
        if problems.len() > 5 {
            break;
        }
    }
    verdict(
        3,
        "γ = 1 and γ = 0 selections equal pure object / pure relation top-K exactly on 100 instances",
        &problems,
    );
}

/// Partition gate: for every (K, L) with 1 ≤ L ≤ K the selector must
/// return exactly K distinct token indices, with the interaction block
/// and the complement block disjoint and their union equal to the
/// selection — including the degenerate no-interaction-prompts case.
#[test]
fn criterion_04_selection_partitions_are_exact() {
    let mut rng = seeded_rng(1004, "acceptance:partition");
    let mut problems = Vec::new();
    let rows = 12;
    let dim = 4;
    for round in 0..3 {
        let visual = random_matrix(rows, dim, &mut rng);
        let t_obj = random_matrix(4, dim, &mut rng);
        // Round 0 exercises the empty interaction-prompt set; later
        // rounds use a real one.
        let t_in = random_matrix(if round == 0 { 0 } else { 3 }, dim, &mut rng);

        for k in 1..=rows {
            for l in 1..=k {
                let cfg = SelectionConfig::new(k, l, 0.5).expect("valid config");
                let result =
                    interaction_select(&visual, &t_in, &t_obj, &cfg).expect("selection runs");
                let interaction: BTreeSet<usize> =
                    result.indices_interaction.iter().copied().collect();
                let missing: BTreeSet<usize> = result.indices_missing.iter().copied().collect();
                let all: BTreeSet<usize> = result.indices_all.iter().copied().collect();
                let union: BTreeSet<usize> = interaction.union(&missing).copied().collect();

                let mut faults = Vec::new();
                if result.indices_all.len() != k || all.len() != k {
                    faults.push("selection is not K distinct indices");
                }
                if !interaction.is_disjoint(&missing) {
                    faults.push("interaction and complement blocks overlap");
                }
                if union != all {
                    faults.push("blocks do not union to the selection");
                }
                if result.indices_interaction.len() + result.indices_missing.len() != k {
                    faults.push("block sizes do not sum to K");
                }
                if result.scores.len() != k {
                    faults.push("scores do not cover the selection");
                }
                if all.iter().any(|&i| i >= rows) {
                    faults.push("selected index out of range");
                }
                if result.indices_all[..result.indices_interaction.len()]
                    != result.indices_interaction[..]
                {
                    faults.push("union does not lead with the interaction block");
                }
                if !faults.is_empty() {
                    problems.push(format!(
                        "round {round}, K={k}, L={l}: {}",
                        faults.join("; ")
                    ));
                }
            }
        }
    }
    verdict(
        4,
        "every (K, L) with 1 ≤ L ≤ K yields K distinct queries split into disjoint interaction/complement blocks",
        &problems,
    );
}

/// Distillation-contrast gate: rescaling each teacher row by a positive
/// factor changes feature magnitudes but not pairwise structure, so the
/// feature-matching loss must react (> 0.1) while the structural loss
/// stays at numerical zero (< 1e-12).
#[test]
fn criterion_05_distillation_separates_magnitude_from_structure() {
    let student_rows = [
        [0.8, -0.2, 0.4],
        [0.1, 0.9, -0.3],
        [-0.5, 0.4, 0.7],
        [0.3, 0.3, 0.3],
    ];
    let scales = [2.0, 3.0, 0.5, 1.5];
    let flat_student: Vec<f64> = student_rows.iter().flatten().copied().collect();
    let flat_teacher: Vec<f64> = student_rows
        .iter()
        .zip(scales)
        .flat_map(|(row, scale)| row.iter().map(move |x| x * scale))
        .collect();
    let student = EdgeFeatureSet::new(
        EmbeddingMatrix::from_flat(4, 3, flat_student).expect("student matrix"),
        vec![true; 4],
    )
    .expect("student set");
    let teacher = EdgeFeatureSet::new(
        EmbeddingMatrix::from_flat(4, 3, flat_teacher).expect("teacher matrix"),
        vec![true; 4],
    )
    .expect("teacher set");

    let (vrd, _) = vrd_loss(&student, &teacher).expect("vrd runs");
    let (rrd, _) = rrd_loss(&student, &teacher).expect("rrd runs");

    let mut problems = Vec::new();
    if !(vrd > 0.1) {
        problems.push(format!("feature loss is {vrd}, expected > 0.1"));
    }
    if !(rrd < 1e-12) {
        problems.push(format!("structural loss is {rrd:e}, expected < 1e-12"));
    }
    verdict(
        5,
        "per-row positive teacher rescaling drives the feature loss above 0.1 while the structural loss stays below 1e-12",
        &problems,
    );
}

/// End-to-end supervision gate, run through the compiled binary: on 20
/// scripted scenes with distractor objects, caption-guided grounding
/// must reproduce the planted candidates exactly (precision and recall
/// 1.0 at IoU 0.5), while the object-category-only baseline — same
/// scenes, same grounder — must over-generate (precision < 1.0).
#[test]
fn criterion_06_pipeline_recovers_planted_supervision_and_beats_the_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ScenarioSpec {
        seed: 6,
        n_images: 20,
        n_object_classes: 8,
        n_relation_classes: 5,
        planted_per_image: 3,
        distractors_per_image: 2,
        ks: vec![20, 50, 100],
        ..ScenarioSpec::default()
    };
    let scenario = build_scenario(&spec).expect("scenario builds");
    write_scenario(&scenario, tmp.path()).expect("scenario writes");

    let paths = r#""paths": {"captions": "captions.tsv", "scenes_dir": "scenes", "manifest": "manifest.json"}"#;
    fs::write(
        tmp.path().join("run.json"),
        format!(r#"{{"seed": 11, "out_dir": "out_full", {paths}}}"#),
    )
    .unwrap();
    fs::write(
        tmp.path().join("baseline.json"),
        format!(
            r#"{{"seed": 11, "out_dir": "out_base", {paths}, "generate_targets": {{"baseline": true}}}}"#
        ),
    )
    .unwrap();

    let mut problems = Vec::new();

    let full = sgkit(&["generate-targets", "--config", "run.json"], tmp.path());
    if code(&full) != 0 {
        problems.push(format!(
            "full run exited {}: {}",
            code(&full),
            stderr(&full)
        ));
    } else {
        let report = read_json(&tmp.path().join("out_full/target_report.json"));
        let planted = report["totals"]["planted"].as_u64();
        let precision = report["precision"].as_f64();
        let recall = report["recall"].as_f64();
        if planted != Some(60) {
            problems.push(format!(
                "expected 60 planted candidates, report says {planted:?}"
            ));
        }
        if precision != Some(1.0) || recall != Some(1.0) {
            problems.push(format!(
                "caption-guided run: precision {precision:?}, recall {recall:?}, expected exactly 1.0 each"
            ));
        }
    }

    let base = sgkit(
        &["generate-targets", "--config", "baseline.json"],
        tmp.path(),
    );
    if code(&base) != 0 {
        problems.push(format!(
            "baseline run exited {}: {}",
            code(&base),
            stderr(&base)
        ));
    } else {
        let report = read_json(&tmp.path().join("out_base/target_report.json"));
        let precision = report["precision"].as_f64().unwrap_or(f64::NAN);
        let generated = report["totals"]["generated"].as_u64().unwrap_or(0);
        let matched = report["totals"]["matched"].as_u64().unwrap_or(0);
        if !(precision < 1.0) {
            problems.push(format!(
                "baseline precision is {precision}, expected strictly below 1.0"
            ));
        }
        if generated <= matched {
            problems.push(format!(
                "baseline generated {generated} candidates but matched {matched}; expected spurious extras"
            ));
        }
    }
    verdict(
        6,
        "caption-guided targets hit precision = recall = 1.0 on 20 distractor scenes where the class-only baseline over-generates",
        &problems,
    );
}

/// Evaluation gate: recall@K must reproduce the scenario manifest's
/// precomputed values exactly, mean recall@K must match a per-relation
/// oracle recomputed from the planted edges, and recall must be
/// monotone non-decreasing in K on every split.
#[test]
fn criterion_07_evaluate_reproduces_the_manifest() {
    let spec = ScenarioSpec {
        seed: 77,
        n_images: 12,
        ..ScenarioSpec::default()
    };
    let scenario = build_scenario(&spec).expect("scenario builds");
    let cfg = EvalConfig {
        ks: spec.ks.clone(),
        ..EvalConfig::default()
    };
    let report = evaluate(
        &scenario.predictions,
        &scenario.ground_truth,
        &scenario.vocabulary,
        &cfg,
    )
    .expect("evaluation runs");
    let manifest = &scenario.manifest;
    let mut problems = Vec::new();

    for &k in &spec.ks {
        let key = format!("R@{k}");
        let expected = manifest.expected_recall.get(&key).copied();
        let got = report.recalls.get("all").and_then(|t| t.get(&key)).copied();
        if expected.is_none() || got != expected {
            problems.push(format!(
                "{key}: evaluate says {got:?}, manifest says {expected:?}"
            ));
        }
    }

    // Mean-recall oracle from the planted record: per-relation totals
    // and correctly-predicted counts. Exact at cutoffs ≥ planted edges
    // per image, where every correct prediction is ranked in and the
    // corrupted ones can never match (wrong relation, disjoint slots).
    let mut gt_per_relation: BTreeMap<usize, usize> = BTreeMap::new();
    let mut hit_per_relation: BTreeMap<usize, usize> = BTreeMap::new();
    for image in manifest.images.values() {
        for planted in &image.planted {
            let id = scenario
                .vocabulary
                .relation_id(&planted.relation)
                .expect("planted relation is in the vocabulary");
            *gt_per_relation.entry(id).or_insert(0) += 1;
            if planted.predicted_correctly {
                *hit_per_relation.entry(id).or_insert(0) += 1;
            }
        }
    }
    for &k in spec.ks.iter().filter(|&&k| k >= spec.planted_per_image) {
        let mut sum = 0.0;
        for (&id, &total) in &gt_per_relation {
            let hits = hit_per_relation.get(&id).copied().unwrap_or(0);
            sum += hits as f64 / total as f64;
        }
        let expected = sum / gt_per_relation.len() as f64;
        let got = report.mean_recalls.get(&format!("mR@{k}")).copied();
        if got != Some(expected) {
            problems.push(format!(
                "mR@{k}: evaluate says {got:?}, oracle says {expected}"
            ));
        }
    }

    for (split, table) in &report.recalls {
        let mut prev = f64::NEG_INFINITY;
        for &k in &spec.ks {
            let recall = table[&format!("R@{k}")];
            if recall < prev {
                problems.push(format!(
                    "split {split}: R@{k} = {recall} drops below the previous cutoff's {prev}"
                ));
            }
            prev = recall;
        }
    }
    verdict(
        7,
        "evaluate() reproduces the manifest's R@K and a per-relation mR@K oracle exactly, with R@K monotone in K",
        &problems,
    );
}

/// Prompt-symmetry gate: the reverse grounding prompt of
/// ⟨man, hold, surfboard⟩ must come out exactly as
/// "surfboard held by man".
#[test]
fn criterion_08_reverse_prompt_uses_the_counter_action() {
    let triplet = CaptionTriplet::new("man", "hold", "surfboard").expect("triplet parses");
    let prompts = build_prompts(&triplet, CounterActionTable::builtin());
    let mut problems = Vec::new();
    if prompts.forward != "man hold surfboard" {
        problems.push(format!("forward prompt is {:?}", prompts.forward));
    }
    if prompts.reverse != "surfboard held by man" {
        problems.push(format!("reverse prompt is {:?}", prompts.reverse));
    }
    verdict(
        8,
        "⟨man, hold, surfboard⟩ grounds forward as \"man hold surfboard\" and reverse as \"surfboard held by man\"",
        &problems,
    );
}

/// Determinism gate, run through the compiled binary: rerunning every
/// command with the same config and seed must rewrite byte-identical
/// output files.
#[test]
fn criterion_09_every_command_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ScenarioSpec {
        seed: 9,
        n_images: 3,
        n_object_classes: 5,
        n_relation_classes: 3,
        planted_per_image: 2,
        distractors_per_image: 1,
        ks: vec![1, 5, 20],
        ..ScenarioSpec::default()
    };
    let scenario = build_scenario(&spec).expect("scenario builds");
    write_scenario(&scenario, tmp.path()).expect("scenario writes");
    fs::write(tmp.path().join("features.json"), FEATURES_FIXTURE).unwrap();
    fs::write(tmp.path().join("run.json"), RERUN_CONFIG).unwrap();

    let mut problems = Vec::new();
    for command in [
        "generate-targets",
        "select-queries",
        "match",
        "distill-check",
        "gradcheck",
        "evaluate",
    ] {
        let first = sgkit(&[command, "--config", "run.json"], tmp.path());
        if code(&first) != 0 {
            problems.push(format!(
                "{command}: first run exited {}: {}",
                code(&first),
                stderr(&first)
            ));
            continue;
        }
        let before = snapshot(&tmp.path().join("out"));
        let second = sgkit(&[command, "--config", "run.json"], tmp.path());
        if code(&second) != 0 {
            problems.push(format!(
                "{command}: second run exited {}: {}",
                code(&second),
                stderr(&second)
            ));
            continue;
        }
        let after = snapshot(&tmp.path().join("out"));
        if before != after {
            let keys: BTreeSet<&String> = before.keys().chain(after.keys()).collect();
            let changed: Vec<&&String> = keys
                .iter()
                .filter(|k| before.get(**k) != after.get(**k))
                .collect();
            problems.push(format!("{command}: rerun changed {changed:?}"));
        }
        if before.is_empty() {
            problems.push(format!("{command}: no output files to compare"));
        }
    }
    verdict(
        9,
        "rerunning all six commands with identical config and seed rewrites byte-identical reports",
        &problems,
    );
}

/// Every file directly inside `dir`, as bytes.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    if !dir.exists() {
        return map;
    }
    for entry in fs::read_dir(dir).expect("out dir lists") {
        let entry = entry.expect("entry reads");
        if entry.file_type().expect("file type").is_file() {
            map.insert(
                entry.file_name().to_string_lossy().into_owned(),
                fs::read(entry.path()).expect("file reads"),
            );
        }
    }
    map
}

const FEATURES_FIXTURE: &str = r#"{
  "vocabulary": {"objects": ["a", "b"], "relations": ["r"], "base_objects": [0, 1], "base_relations": [0]},
  "graphs": [],
  "embeddings": {
    "student_edges_0": {"dim": 2, "rows": [[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]]},
    "teacher_edges_0": {"dim": 2, "rows": [[0.25, 0.75], [1.0, 0.0], [0.0, 1.0]]},
    "negative_mask_0": {"dim": 1, "rows": [[1.0], [0.0], [1.0]]}
  }
}"#;

const RERUN_CONFIG: &str = r#"{
  "seed": 5,
  "out_dir": "out",
  "paths": {
    "ground_truth": "ground_truth.json",
    "predictions": "predictions.json",
    "captions": "captions.tsv",
    "scenes_dir": "scenes",
    "manifest": "manifest.json",
    "features": "features.json"
  },
  "select_queries": {"k": 4, "dim": 8, "n_tokens": 12},
  "eval": {"ks": [1, 5, 20]},
  "gradcheck": {"instances": 5}
}"#;

/// Optimization gate: 200 coordinate-descent steps over the five-image
/// stub fixture must cut the combined loss by at least half, inside 60
/// seconds.
#[test]
fn criterion_10_descent_smoke_halves_the_loss() {
    let started = Instant::now();
    let cfg = DescentConfig::default();
    let trace = smoke_descent(&cfg).expect("descent runs");
    let elapsed = started.elapsed();

    let mut problems = Vec::new();
    if !(trace.initial_loss.is_finite() && trace.initial_loss > 0.0) {
        problems.push(format!("initial loss is {}", trace.initial_loss));
    }
    let reduction = trace.reduction();
    if !(reduction >= 0.5) {
        problems.push(format!(
            "loss fell {:.1}% (from {} to {}), need ≥ 50%",
            reduction * 100.0,
            trace.initial_loss,
            trace.final_loss
        ));
    }
    if trace.history.len() != cfg.steps + 1 {
        problems.push(format!(
            "history has {} entries, expected {}",
            trace.history.len(),
            cfg.steps + 1
        ));
    }
    if elapsed.as_secs_f64() >= 60.0 {
        problems.push(format!("took {elapsed:.2?}, budget is 60s"));
    }
    verdict(
        10,
        "200 descent steps over the five-image stub cut total loss by at least half within 60s",
        &problems,
    );
}
