//! The six subcommands. Each takes a [`ResolvedRun`], reads its input
//! fixtures, writes one or two JSON reports into the output directory
//! (atomically, with the config hash and seed embedded), and returns a
//! one-line summary for stdout.
//!
//! Determinism contract: every function here is a pure function of
//! (effective config, input files), so a rerun produces byte-identical
//! outputs. All maps are ordered, every float serializes via the shortest
//! round-trip representation, and no wall-clock or filesystem-order
//! values enter any report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use sgkit::assignment::{build_cost, hungarian};
use sgkit::distillation::{rrd_loss, vrd_loss, EdgeFeatureSet};
use sgkit::fixture::{atomic_write, load_fixture, Fixture};
use sgkit::geometry::iou;
use sgkit::metrics::evaluate;
use sgkit::query_selection::{
    decompose_triplets, interaction_select, relevance_scores, top_k, SelectionConfig,
};
use sgkit::scenario::Manifest;
use sgkit::scene_model::StubSceneModel;
use sgkit::target_gen::{baseline_targets, generate_targets, CounterActionTable, ScriptedGrounder};
use sgkit::types::{EmbeddingMatrix, SceneGraph, TripletCandidate, Vocabulary};

use crate::config::ResolvedRun;
use crate::gradsuite::{run_suite, SuiteSettings};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Unwrap a `paths.*` entry that this command cannot run without.
fn require<'a>(entry: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    entry
        .as_deref()
        .ok_or_else(|| CliError::Input(format!("this command requires paths.{name} in the config")))
}

/// Pretty-print `value` and write it atomically as `out_dir/name`.
fn write_json(out_dir: &Path, name: &str, value: &Value) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| {
        CliError::Input(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        ))
    })?;
    let text = serde_json::to_string_pretty(value).expect("report values serialize") + "\n";
    atomic_write(out_dir.join(name), text.as_bytes())?;
    Ok(())
}

fn triplet_json(t: &TripletCandidate) -> Value {
    serde_json::to_value(t).expect("candidate serializes")
}

/// Parse `image_id<TAB>caption` lines. Blank lines are skipped; ids must
/// be unique and filesystem-safe (they name scene-script files).
fn parse_captions(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read captions {}: {e}", path.display())))?;
    parse_captions_str(&text)
}

/// String form of the captions parser; see [`parse_captions`].
pub fn parse_captions_str(text: &str) -> Result<BTreeMap<String, String>> {
    let mut captions = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (id, caption) = line.split_once('\t').ok_or_else(|| {
            CliError::Input(format!(
                "captions line {}: expected image_id<TAB>caption",
                lineno + 1
            ))
        })?;
        if id.is_empty()
            || !id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(CliError::Input(format!(
                "captions line {}: image id {id:?} must be non-empty [A-Za-z0-9_-]",
                lineno + 1
            )));
        }
        if captions
            .insert(id.to_string(), caption.to_string())
            .is_some()
        {
            return Err(CliError::Input(format!(
                "captions line {}: duplicate image id {id:?}",
                lineno + 1
            )));
        }
    }
    Ok(captions)
}

/// Greedy one-to-one match of generated candidates against the planted
/// triplets of one image: label equality plus IoU ≥ `threshold` on both
/// boxes, each planted triplet consumable once.
fn count_matches(
    candidates: &[TripletCandidate],
    planted: &[sgkit::scenario::PlantedTriplet],
    threshold: f64,
) -> usize {
    let mut consumed = vec![false; planted.len()];
    let mut matched = 0;
    for c in candidates {
        for (i, p) in planted.iter().enumerate() {
            if consumed[i] {
                continue;
            }
            if c.subject_label == p.subject
                && c.relation_label == p.relation
                && c.object_label == p.object
                && iou(&c.subject_box, &p.subject_box) >= threshold
                && iou(&c.object_box, &p.object_box) >= threshold
            {
                consumed[i] = true;
                matched += 1;
                break;
            }
        }
    }
    matched
}

fn ratio(num: usize, den: usize) -> Value {
    if den == 0 {
        Value::Null
    } else {
        json!(num as f64 / den as f64)
    }
}

/// generate-targets: run the caption → prompts → grounding → combine
/// pipeline per captioned image, then score the candidates against the
/// manifest's planted supervision. Writes `targets.json` (the candidates)
/// and `target_report.json` (precision/recall vs planted truth, scoped to
/// the captioned images — an empty caption file yields empty candidates
/// and an all-zero report).
pub fn cmd_generate_targets(run: &ResolvedRun) -> Result<String> {
    let cfg = &run.config;
    let section = &cfg.generate_targets;
    section.settings.validate()?;
    let captions_path = require(&cfg.paths.captions, "captions")?;
    let scenes_dir = require(&cfg.paths.scenes_dir, "scenes_dir")?;
    let manifest_path = require(&cfg.paths.manifest, "manifest")?;

    let captions = parse_captions(captions_path)?;
    let manifest = Manifest::load(manifest_path)?;
    let table_owned;
    let table: &CounterActionTable = match &cfg.paths.counter_actions {
        Some(path) => {
            table_owned = CounterActionTable::from_file(path)?;
            &table_owned
        }
        None => CounterActionTable::builtin(),
    };

    let mut images_targets = serde_json::Map::new();
    let mut images_report = serde_json::Map::new();
    let mut n_candidates = 0usize;
    let (mut total_planted, mut total_generated, mut total_matched) = (0usize, 0usize, 0usize);

    for (id, caption) in &captions {
        let scene_path = scenes_dir.join(format!("{id}.json"));
        if !scene_path.exists() {
            return Err(CliError::Input(format!(
                "no scene script for image {id:?}: {}",
                scene_path.display()
            )));
        }
        let grounder = ScriptedGrounder::from_file(&scene_path)?;
        let candidates = if section.baseline {
            baseline_targets(caption, &grounder, &section.settings)?
        } else {
            generate_targets(caption, &grounder, table, &section.settings)?
        };

        let planted: &[sgkit::scenario::PlantedTriplet] = manifest
            .images
            .get(id)
            .map(|m| m.planted.as_slice())
            .unwrap_or(&[]);
        let matched = count_matches(&candidates, planted, section.settings.iou_threshold);
        total_planted += planted.len();
        total_generated += candidates.len();
        total_matched += matched;
        n_candidates += candidates.len();

        images_report.insert(
            id.clone(),
            json!({
                "planted": planted.len(),
                "generated": candidates.len(),
                "matched": matched,
            }),
        );
        images_targets.insert(
            id.clone(),
            Value::Array(candidates.iter().map(triplet_json).collect()),
        );
    }

    write_json(
        &run.out_dir,
        "targets.json",
        &json!({
            "config_hash": run.config_hash,
            "seed": cfg.seed,
            "n_images": captions.len(),
            "n_candidates": n_candidates,
            "images": Value::Object(images_targets),
        }),
    )?;
    write_json(
        &run.out_dir,
        "target_report.json",
        &json!({
            "config_hash": run.config_hash,
            "seed": cfg.seed,
            "baseline": section.baseline,
            "iou_threshold": section.settings.iou_threshold,
            "images": Value::Object(images_report),
            "totals": {
                "planted": total_planted,
                "generated": total_generated,
                "matched": total_matched,
            },
            "precision": ratio(total_matched, total_generated),
            "recall": ratio(total_matched, total_planted),
        }),
    )?;
    Ok(format!(
        "generate-targets: {} images, {} candidates, {}/{} planted recovered",
        captions.len(),
        n_candidates,
        total_matched,
        total_planted
    ))
}

/// select-queries: the two-pass protocol per fixture image. Pass 1 ranks
/// visual tokens by blended object/relation relevance and keeps the top
/// K; the stub model reads triplets off those tokens; their decomposed
/// "subject predicate" / "predicate object" phrases drive the pass-2
/// interaction selection (L interaction slots + K−L object slots).
///
/// Visual tokens come from a fixture embedding named `visual:{index}`
/// when present, otherwise from the deterministic stub encoder; the
/// report records which source served each image.
pub fn cmd_select_queries(run: &ResolvedRun) -> Result<String> {
    let cfg = &run.config;
    let section = &cfg.select_queries;
    let gt_path = require(&cfg.paths.ground_truth, "ground_truth")?;
    let fixture = load_fixture(gt_path)?;
    let vocab = &fixture.vocabulary;

    let l = section.l.unwrap_or((section.k / 2).max(1));
    let selection = SelectionConfig::new(section.k, l, section.gamma)?;
    let model = StubSceneModel::from_seed(cfg.seed, section.dim)?;
    let t_obj = model.encoder.encode_tokens(vocab.object_classes())?;
    let t_rel = model.encoder.encode_tokens(vocab.relation_classes())?;

    let mut images = Vec::with_capacity(fixture.graphs.len());
    for index in 0..fixture.graphs.len() {
        let key = format!("visual:{index}");
        let (visual, source) = match fixture.embeddings.get(&key) {
            Some(m) => {
                if m.dim() != section.dim {
                    return Err(CliError::Input(format!(
                        "embedding {key} has dim {}, config select_queries.dim is {}",
                        m.dim(),
                        section.dim
                    )));
                }
                (m.clone(), "embeddings")
            }
            None => {
                let mut rows = Vec::with_capacity(section.n_tokens);
                for t in 0..section.n_tokens {
                    rows.push(model.encoder.embed(&format!("visual:{index}:{t}"))?);
                }
                (
                    EmbeddingMatrix::from_rows(rows).expect("encoder rows share the dim"),
                    "stub-encoder",
                )
            }
        };

        let scores = relevance_scores(&visual, &t_obj, &t_rel, section.gamma)?;
        let pass1 = top_k(&scores, section.k)?;
        let predicted = model.predict_triplets(&visual, &pass1, vocab, section.max_triplets)?;
        let prompts = decompose_triplets(&predicted);
        let t_in = if prompts.pairs.is_empty() {
            EmbeddingMatrix::zeros(0, section.dim)
        } else {
            model.encoder.encode_tokens(&prompts.pairs)?
        };
        let pass2 = interaction_select(&visual, &t_in, &t_obj, &selection)?;

        images.push(json!({
            "index": index,
            "source": source,
            "n_tokens": visual.rows(),
            "pass1": {
                "indices": pass1,
                "scores": pass1.iter().map(|&i| scores[i]).collect::<Vec<f64>>(),
            },
            "predicted_triplets": predicted.iter().map(triplet_json).collect::<Vec<Value>>(),
            "prompt_pairs": prompts.pairs,
            "pass2": serde_json::to_value(&pass2).expect("selection serializes"),
        }));
    }

    let n_images = images.len();
    write_json(
        &run.out_dir,
        "selection.json",
        &json!({
            "config_hash": run.config_hash,
            "seed": cfg.seed,
            "k": section.k,
            "l": l,
            "gamma": section.gamma,
            "dim": section.dim,
            "images": images,
            "n_images": n_images,
        }),
    )?;
    Ok(format!(
        "select-queries: {n_images} images, K={} L={l} gamma={}",
        section.k, section.gamma
    ))
}

/// Both fixtures of an aligned pair (predictions vs ground truth) must
/// describe the same class universe and the same number of images.
fn check_aligned_fixtures(pred: &Fixture, gt: &Fixture) -> Result<()> {
    if pred.vocabulary != gt.vocabulary {
        return Err(CliError::Input(
            "prediction and ground-truth fixtures carry different vocabularies".to_string(),
        ));
    }
    if pred.graphs.len() != gt.graphs.len() {
        return Err(CliError::Input(format!(
            "prediction fixture has {} graphs, ground truth has {}",
            pred.graphs.len(),
            gt.graphs.len()
        )));
    }
    Ok(())
}

/// One-hot class-score matrix for the prediction nodes of one graph:
/// row i puts the node's detection score in its class column. This is the
/// cost-matrix input derived from a plain fixture, which stores one class
/// id + score per node rather than a full score distribution.
fn one_hot_scores(graph: &SceneGraph, vocab: &Vocabulary) -> EmbeddingMatrix {
    let mut scores = EmbeddingMatrix::zeros(graph.nodes().len(), vocab.n_objects());
    for (i, node) in graph.nodes().iter().enumerate() {
        scores.row_mut(i)[node.class_id] = node.score;
    }
    scores
}

/// match: Hungarian assignment of prediction nodes to ground-truth nodes
/// per image under the configured class/L1/GIoU cost. Empty inputs yield
/// empty dumps.
pub fn cmd_match(run: &ResolvedRun) -> Result<String> {
    let cfg = &run.config;
    let gt_path = require(&cfg.paths.ground_truth, "ground_truth")?;
    let pred_path = require(&cfg.paths.predictions, "predictions")?;
    let gt = load_fixture(gt_path)?;
    let pred = load_fixture(pred_path)?;
    check_aligned_fixtures(&pred, &gt)?;

    let mut images = Vec::with_capacity(gt.graphs.len());
    let mut total_pairs = 0usize;
    for (index, (p, g)) in pred.graphs.iter().zip(&gt.graphs).enumerate() {
        let boxes: Vec<_> = p.nodes().iter().map(|n| n.bbox).collect();
        let scores = one_hot_scores(p, &pred.vocabulary);
        let cost = build_cost(&boxes, &scores, g, cfg.match_section.weights)?;
        let matching = hungarian(&cost);
        total_pairs += matching.pairs.len();
        images.push(json!({
            "index": index,
            "n_pred": p.nodes().len(),
            "n_gt": g.nodes().len(),
            "pairs": matching.pairs,
            "total_cost": matching.total_cost,
        }));
    }

    let n_images = images.len();
    write_json(
        &run.out_dir,
        "matching.json",
        &json!({
            "config_hash": run.config_hash,
            "seed": cfg.seed,
            "weights": serde_json::to_value(cfg.match_section.weights).expect("weights serialize"),
            "images": images,
            "n_images": n_images,
        }),
    )?;
    Ok(format!(
        "match: {n_images} images, {total_pairs} matched pairs"
    ))
}

/// distill-check: evaluate both distillation losses on every edge-feature
/// set in the features fixture. Sets are named `student_edges_{i}` /
/// `teacher_edges_{i}` for consecutive i from 0; an optional
/// `negative_mask_{i}` (n×1, entries > 0.5 mark negatives) restricts the
/// negative set, and a missing mask means every row is negative. A
/// fixture with no sets yields an empty dump.
pub fn cmd_distill_check(run: &ResolvedRun) -> Result<String> {
    let cfg = &run.config;
    cfg.distill.validate()?;
    let features_path = require(&cfg.paths.features, "features")?;
    let fixture = load_fixture(features_path)?;

    let mut sets = Vec::new();
    let (mut total_vrd, mut total_rrd) = (0.0f64, 0.0f64);
    for index in 0.. {
        let Some(student) = fixture.embeddings.get(&format!("student_edges_{index}")) else {
            break;
        };
        let teacher = fixture
            .embeddings
            .get(&format!("teacher_edges_{index}"))
            .ok_or_else(|| {
                CliError::Input(format!(
                    "student_edges_{index} has no matching teacher_edges_{index}"
                ))
            })?;
        let mask = match fixture.embeddings.get(&format!("negative_mask_{index}")) {
            Some(m) => {
                if m.dim() != 1 || m.rows() != student.rows() {
                    return Err(CliError::Input(format!(
                        "negative_mask_{index} must be {}×1, got {}×{}",
                        student.rows(),
                        m.rows(),
                        m.dim()
                    )));
                }
                m.iter_rows().map(|r| r[0] > 0.5).collect()
            }
            None => vec![true; student.rows()],
        };
        let student_set = EdgeFeatureSet::new(student.clone(), mask.clone())?;
        let teacher_set = EdgeFeatureSet::new(teacher.clone(), mask)?;
        let (vrd, vrd_grad) = vrd_loss(&student_set, &teacher_set)?;
        let (rrd, rrd_grad) = rrd_loss(&student_set, &teacher_set)?;
        let norm = |m: &EmbeddingMatrix| m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        total_vrd += vrd;
        total_rrd += rrd;
        sets.push(json!({
            "index": index,
            "rows": student.rows(),
            "dim": student.dim(),
            "n_negative": student_set.negative_indices().len(),
            "vrd": vrd,
            "rrd": rrd,
            "vrd_grad_norm": norm(&vrd_grad),
            "rrd_grad_norm": norm(&rrd_grad),
            "weighted": cfg.distill.beta1 * vrd + cfg.distill.beta2 * rrd,
        }));
    }

    let n_sets = sets.len();
    write_json(
        &run.out_dir,
        "distill.json",
        &json!({
            "config_hash": run.config_hash,
            "seed": cfg.seed,
            "beta1": cfg.distill.beta1,
            "beta2": cfg.distill.beta2,
            "sets": sets,
            "totals": {
                "vrd": total_vrd,
                "rrd": total_rrd,
                "weighted": cfg.distill.beta1 * total_vrd + cfg.distill.beta2 * total_rrd,
            },
            "n_sets": n_sets,
        }),
    )?;
    Ok(format!(
        "distill-check: {n_sets} sets, vrd {total_vrd:.6} rrd {total_rrd:.6}"
    ))
}

/// gradcheck: run the finite-difference suite over every differentiable
/// op. The report is written even when a verdict fails, and any failure
/// then surfaces as a verification error (exit 1).
pub fn cmd_gradcheck(run: &ResolvedRun) -> Result<String> {
    let cfg = &run.config;
    let g = &cfg.gradcheck;
    if g.instances == 0 {
        return Err(CliError::Input(
            "gradcheck.instances must be at least 1".to_string(),
        ));
    }
    for (name, v) in [
        ("gradcheck.step", g.step),
        ("gradcheck.tolerance", g.tolerance),
        ("gradcheck.floor", g.floor),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(CliError::Input(format!(
                "{name} must be positive and finite (got {v})"
            )));
        }
    }
    let settings = SuiteSettings {
        instances: g.instances,
        step: g.step,
        tolerance: g.tolerance,
        floor: g.floor,
        corrupt: g.corrupt,
    };
    let outcomes = run_suite(cfg.seed, &settings)?;
    let all_passed = outcomes.iter().all(|o| o.passed);
    let ops: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "op": o.op,
                "instances": o.instances,
                "max_rel_error": o.max_rel_error,
                "tolerance": o.tolerance,
                "passed": o.passed,
            })
        })
        .collect();
    write_json(
        &run.out_dir,
        "gradcheck.json",
        &json!({
            "config_hash": run.config_hash,
            "seed": cfg.seed,
            "step": g.step,
            "tolerance": g.tolerance,
            "floor": g.floor,
            "instances": g.instances,
            "corrupt": g.corrupt,
            "ops": ops,
            "all_passed": all_passed,
        }),
    )?;
    if !all_passed {
        let failed: Vec<&str> = outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.op)
            .collect();
        return Err(CliError::Verification(format!(
            "gradient check failed for: {}",
            failed.join(", ")
        )));
    }
    Ok(format!(
        "gradcheck: {} ops x {} instances, all within {:e}",
        outcomes.len(),
        g.instances,
        g.tolerance
    ))
}

/// evaluate: recall@K / mean-recall@K of the prediction fixture against
/// the ground-truth fixture, per split.
pub fn cmd_evaluate(run: &ResolvedRun) -> Result<String> {
    let cfg = &run.config;
    let gt_path = require(&cfg.paths.ground_truth, "ground_truth")?;
    let pred_path = require(&cfg.paths.predictions, "predictions")?;
    let gt = load_fixture(gt_path)?;
    let pred = load_fixture(pred_path)?;
    check_aligned_fixtures(&pred, &gt)?;

    let report = evaluate(&pred.graphs, &gt.graphs, &gt.vocabulary, &cfg.eval)?;
    write_json(
        &run.out_dir,
        "evaluation.json",
        &json!({
            "config_hash": run.config_hash,
            "seed": cfg.seed,
            "report": report.to_json(),
        }),
    )?;
    let headline = cfg
        .eval
        .ks
        .iter()
        .map(|&k| format!("R@{k}={:.4}", report.recall("all", k).unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(format!("evaluate: {} images, {headline}", gt.graphs.len()))
}
