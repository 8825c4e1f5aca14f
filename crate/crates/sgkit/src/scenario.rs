//! Deterministic synthetic-scenario generation: scenes with planted
//! relation triplets, same-class distractor objects that carry no
//! relations, scripted grounding scenes, captions, a canned predictor,
//! and a manifest whose arithmetic is authoritative for every expected
//! number downstream.
//!
//! The geometry is engineered so the oracles are exact: each planted pair
//! occupies its own grid slot with subject/object boxes overlapping at
//! IoU 5/7, slots never overlap each other, subject and object classes
//! always differ, and every forward/reverse phrase in an image is unique.
//! Consequently a correct canned prediction can match only its own
//! planted edge, and expected hits at cutoff K reduce to
//! `min(K, correct predictions)` per image.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixture::{atomic_write, save_fixture, Fixture};
use crate::types::{BoundingBox, Edge, EdgeSplit, Node, SceneGraph, Vocabulary};

/// Object-class name pool (all bundled-lexicon nouns).
const OBJECT_POOL: [&str; 16] = [
    "man",
    "horse",
    "surfboard",
    "dog",
    "bike",
    "boat",
    "car",
    "chair",
    "pizza",
    "cat",
    "umbrella",
    "kite",
    "bench",
    "laptop",
    "bottle",
    "backpack",
];

/// Relation-class name pool (all bundled-lexicon verbs/prepositions with
/// counter-action table entries).
const RELATION_POOL: [&str; 10] = [
    "hold", "riding", "on", "carrying", "watching", "above", "near", "under", "eating", "pushing",
];

/// Confidence scripted for every planted grounding box.
const SCRIPT_CONFIDENCE: f64 = 0.9;

/// Parameters of a generated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub n_images: usize,
    pub n_object_classes: usize,
    pub n_relation_classes: usize,
    pub planted_per_image: usize,
    pub distractors_per_image: usize,
    /// Fraction of object classes tagged novel (the tail of the pool).
    pub novel_object_fraction: f64,
    /// Fraction of relation classes tagged novel.
    pub novel_relation_fraction: f64,
    /// Probability that the canned predictor reproduces a planted edge
    /// correctly (otherwise it corrupts the relation class).
    pub canned_hit_rate: f64,
    /// Recall cutoffs the manifest precomputes.
    pub ks: Vec<usize>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 0,
            n_images: 10,
            n_object_classes: 6,
            n_relation_classes: 4,
            planted_per_image: 3,
            distractors_per_image: 2,
            novel_object_fraction: 0.3,
            novel_relation_fraction: 0.25,
            canned_hit_rate: 0.7,
            ks: vec![1, 2, 5, 20, 50, 100],
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("novel_object_fraction", self.novel_object_fraction),
            ("novel_relation_fraction", self.novel_relation_fraction),
            ("canned_hit_rate", self.canned_hit_rate),
        ] {
            if !(0.0..=1.0).contains(&f) || !f.is_finite() {
                return Err(Error::config(format!("{name} must lie in [0,1] (got {f})")));
            }
        }
        if self.n_object_classes == 0 || self.n_object_classes > OBJECT_POOL.len() {
            return Err(Error::config(format!(
                "n_object_classes must lie in [1,{}]",
                OBJECT_POOL.len()
            )));
        }
        if self.n_relation_classes == 0 || self.n_relation_classes > RELATION_POOL.len() {
            return Err(Error::config(format!(
                "n_relation_classes must lie in [1,{}]",
                RELATION_POOL.len()
            )));
        }
        if self.planted_per_image > 0 {
            if self.n_object_classes < 2 {
                return Err(Error::config(
                    "planted triplets need ≥ 2 object classes (subject ≠ object)",
                ));
            }
            if self.n_relation_classes < 2 {
                return Err(Error::config(
                    "the canned predictor needs ≥ 2 relation classes to corrupt into",
                ));
            }
        }
        if self.planted_per_image + self.distractors_per_image > GRID_SLOTS {
            return Err(Error::config(format!(
                "planted + distractor pairs per image must not exceed {GRID_SLOTS}"
            )));
        }
        if self.ks.is_empty() || !self.ks.windows(2).all(|w| w[0] < w[1]) || self.ks[0] == 0 {
            return Err(Error::config("ks must be non-empty, positive, ascending"));
        }
        Ok(())
    }
}

/// One planted triplet as the manifest records it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTriplet {
    pub subject: String,
    pub relation: String,
    pub object: String,
    /// Open-vocabulary split tag of this edge.
    pub split: String,
    pub subject_box: BoundingBox,
    pub object_box: BoundingBox,
    /// Expected pseudo-label confidence (product of scripted box
    /// confidences).
    pub confidence: f64,
    /// Whether the canned predictor reproduces this edge correctly.
    pub predicted_correctly: bool,
}

/// Per-image manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageManifest {
    pub planted: Vec<PlantedTriplet>,
    /// cutoff (as a decimal string key) → hits expected from the canned
    /// predictor.
    pub expected_hits: BTreeMap<String, usize>,
    pub n_distractors: usize,
}

/// The authoritative record of what was planted and what every consumer
/// must reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub ks: Vec<usize>,
    pub novel_objects: Vec<String>,
    pub novel_relations: Vec<String>,
    /// split tag (plus "all") → GT triplet count.
    pub split_counts: BTreeMap<String, usize>,
    /// "R@K" → recall the canned predictor must score over all images.
    pub expected_recall: BTreeMap<String, f64>,
    pub images: BTreeMap<String, ImageManifest>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScriptDetection {
    #[serde(rename = "box")]
    box_: [f64; 4],
    conf: f64,
}

/// Scene script in the grounding schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneScript {
    pub scene_id: String,
    phrases: BTreeMap<String, Vec<ScriptDetection>>,
}

/// A fully built scenario, in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub vocabulary: Vocabulary,
    pub image_ids: Vec<String>,
    pub ground_truth: Vec<SceneGraph>,
    pub predictions: Vec<SceneGraph>,
    pub captions: BTreeMap<String, String>,
    pub scenes: BTreeMap<String, SceneScript>,
    pub manifest: Manifest,
}

const GRID_SLOTS: usize = 16;
const SLOT_EXTENT: f64 = 0.12;
/// Horizontal shift between a pair's subject and object boxes; IoU of the
/// pair is (w−d)/(w+d) = 5/7 ≥ 0.5.
const PAIR_SHIFT: f64 = SLOT_EXTENT / 6.0;

/// Subject/object boxes for pair slot `slot` (4×4 grid, disjoint between
/// slots).
fn slot_boxes(slot: usize) -> (BoundingBox, BoundingBox) {
    let col = (slot % 4) as f64;
    let row = (slot / 4) as f64;
    let cx = 0.12 + 0.24 * col;
    let cy = 0.12 + 0.24 * row;
    let subject = BoundingBox::new(cx, cy, SLOT_EXTENT, SLOT_EXTENT).expect("grid box valid");
    let object =
        BoundingBox::new(cx + PAIR_SHIFT, cy, SLOT_EXTENT, SLOT_EXTENT).expect("grid box valid");
    (subject, object)
}

fn split_tag(
    vocab: &Vocabulary,
    subject_class: usize,
    relation: usize,
    object_class: usize,
) -> EdgeSplit {
    let object_novel = !vocab.is_base_object(subject_class) || !vocab.is_base_object(object_class);
    let relation_novel = !vocab.is_base_relation(relation);
    match (object_novel, relation_novel) {
        (false, false) => EdgeSplit::Base,
        (true, false) => EdgeSplit::NovelObject,
        (false, true) => EdgeSplit::NovelRelation,
        (true, true) => EdgeSplit::NovelBoth,
    }
}

/// Build the vocabulary for a spec: pool prefixes with the tail
/// ⌊fraction·n⌋ classes of each kind tagged novel.
fn build_vocabulary(spec: &ScenarioSpec) -> Result<Vocabulary> {
    let objects: Vec<String> = OBJECT_POOL[..spec.n_object_classes]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let relations: Vec<String> = RELATION_POOL[..spec.n_relation_classes]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let novel_objects = (spec.novel_object_fraction * spec.n_object_classes as f64) as usize;
    let novel_relations = (spec.novel_relation_fraction * spec.n_relation_classes as f64) as usize;
    let base_objects: Vec<usize> = (0..spec.n_object_classes - novel_objects).collect();
    let base_relations: Vec<usize> = (0..spec.n_relation_classes - novel_relations).collect();
    Vocabulary::new(objects, relations, base_objects, base_relations)
}

/// Generate the full scenario for a spec. Identical specs produce
/// identical scenarios, bit for bit.
pub fn build_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let vocab = build_vocabulary(spec)?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut image_ids = Vec::new();
    let mut ground_truth = Vec::new();
    let mut predictions = Vec::new();
    let mut captions = BTreeMap::new();
    let mut scenes = BTreeMap::new();
    let mut images = BTreeMap::new();
    let mut split_counts: BTreeMap<String, usize> = std::iter::once(("all".to_string(), 0))
        .chain(EdgeSplit::all().iter().map(|s| (s.as_str().to_string(), 0)))
        .collect();
    let mut total_planted = 0usize;
    let mut total_expected_hits: BTreeMap<usize, usize> = spec.ks.iter().map(|&k| (k, 0)).collect();

    for image_index in 0..spec.n_images {
        let image_id = format!("img{image_index:03}");

        // Sample distinct (s, r, o) triples with s ≠ o and collision-free
        // forward/reverse phrases.
        let mut triples: Vec<(usize, usize, usize)> = Vec::new();
        let mut used_phrases: BTreeSet<String> = BTreeSet::new();
        let mut attempts = 0usize;
        while triples.len() < spec.planted_per_image {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::config(
                    "could not sample distinct non-colliding planted triplets; \
                     reduce planted_per_image or enlarge the vocabulary",
                ));
            }
            let s = rng.random_range(0..spec.n_object_classes);
            let o = rng.random_range(0..spec.n_object_classes);
            if s == o {
                continue;
            }
            let r = rng.random_range(0..spec.n_relation_classes);
            if triples.contains(&(s, r, o)) {
                continue;
            }
            let s_name = vocab.object_name(s).expect("in range");
            let r_name = vocab.relation_name(r).expect("in range");
            let o_name = vocab.object_name(o).expect("in range");
            let forward = format!("{s_name} {r_name} {o_name}");
            let reverse = format!(
                "{o_name} {} {s_name}",
                crate::target_gen::counter_action(
                    r_name,
                    crate::target_gen::CounterActionTable::builtin()
                )
            );
            if used_phrases.contains(&forward) || used_phrases.contains(&reverse) {
                continue;
            }
            used_phrases.insert(forward);
            used_phrases.insert(reverse);
            triples.push((s, r, o));
        }

        // Lay out nodes: one pair slot per planted triplet, then one per
        // distractor cluster.
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut pred_edges = Vec::new();
        let mut planted_manifest = Vec::new();
        let mut phrases: BTreeMap<String, Vec<ScriptDetection>> = BTreeMap::new();
        let mut class_boxes: BTreeMap<usize, Vec<BoundingBox>> = BTreeMap::new();
        let mut caption_clauses = Vec::new();
        let mut n_correct = 0usize;

        for (slot, &(s, r, o)) in triples.iter().enumerate() {
            let (s_box, o_box) = slot_boxes(slot);
            let s_node = nodes.len();
            nodes.push(Node {
                bbox: s_box,
                class_id: s,
                score: 1.0,
            });
            let o_node = nodes.len();
            nodes.push(Node {
                bbox: o_box,
                class_id: o,
                score: 1.0,
            });
            edges.push(Edge {
                subject: s_node,
                object: o_node,
                relation: r,
                score: 1.0,
            });
            class_boxes.entry(s).or_default().push(s_box);
            class_boxes.entry(o).or_default().push(o_box);

            let s_name = vocab.object_name(s).expect("in range");
            let r_name = vocab.relation_name(r).expect("in range");
            let o_name = vocab.object_name(o).expect("in range");
            let forward = format!("{s_name} {r_name} {o_name}");
            let reverse = format!(
                "{o_name} {} {s_name}",
                crate::target_gen::counter_action(
                    r_name,
                    crate::target_gen::CounterActionTable::builtin()
                )
            );
            phrases.insert(
                forward.clone(),
                vec![ScriptDetection {
                    box_: s_box.into(),
                    conf: SCRIPT_CONFIDENCE,
                }],
            );
            phrases.insert(
                reverse,
                vec![ScriptDetection {
                    box_: o_box.into(),
                    conf: SCRIPT_CONFIDENCE,
                }],
            );
            caption_clauses.push(forward);

            // Canned prediction: correct copy or corrupted relation.
            let correct = rng.random_bool(spec.canned_hit_rate);
            let (pred_relation, pred_score) = if correct {
                n_correct += 1;
                (r, rng.random_range(0.7..0.95))
            } else {
                (
                    (r + 1) % spec.n_relation_classes,
                    rng.random_range(0.2..0.45),
                )
            };
            pred_edges.push(Edge {
                subject: s_node,
                object: o_node,
                relation: pred_relation,
                score: pred_score,
            });

            let split = split_tag(&vocab, s, r, o);
            *split_counts.get_mut("all").expect("present") += 1;
            *split_counts.get_mut(split.as_str()).expect("present") += 1;
            planted_manifest.push(PlantedTriplet {
                subject: s_name.to_string(),
                relation: r_name.to_string(),
                object: o_name.to_string(),
                split: split.as_str().to_string(),
                subject_box: s_box,
                object_box: o_box,
                confidence: SCRIPT_CONFIDENCE * SCRIPT_CONFIDENCE,
                predicted_correctly: correct,
            });
        }

        // Distractor clusters: same classes as interacting objects, no
        // edges. The first cluster reuses the first planted pair's
        // classes so a class-phrase-only grounding baseline always
        // over-generates.
        let interacting: Vec<usize> = {
            let mut c: Vec<usize> = triples.iter().flat_map(|&(s, _, o)| [s, o]).collect();
            c.sort_unstable();
            c.dedup();
            c
        };
        for d in 0..spec.distractors_per_image {
            if interacting.is_empty() {
                break;
            }
            let (c_s, c_o) = if d == 0 {
                (triples[0].0, triples[0].2)
            } else {
                (
                    interacting[rng.random_range(0..interacting.len())],
                    interacting[rng.random_range(0..interacting.len())],
                )
            };
            let (d_s_box, d_o_box) = slot_boxes(spec.planted_per_image + d);
            nodes.push(Node {
                bbox: d_s_box,
                class_id: c_s,
                score: 1.0,
            });
            nodes.push(Node {
                bbox: d_o_box,
                class_id: c_o,
                score: 1.0,
            });
            class_boxes.entry(c_s).or_default().push(d_s_box);
            class_boxes.entry(c_o).or_default().push(d_o_box);
        }

        // Bare class-name phrases expose every instance of the class,
        // distractors included.
        for (class_id, boxes) in &class_boxes {
            let name = vocab.object_name(*class_id).expect("in range");
            phrases.insert(
                name.to_string(),
                boxes
                    .iter()
                    .map(|b| ScriptDetection {
                        box_: (*b).into(),
                        conf: SCRIPT_CONFIDENCE,
                    })
                    .collect(),
            );
        }

        let mut expected_hits = BTreeMap::new();
        for &k in &spec.ks {
            let hits = n_correct.min(k);
            expected_hits.insert(k.to_string(), hits);
            *total_expected_hits.get_mut(&k).expect("present") += hits;
        }
        total_planted += triples.len();

        ground_truth.push(SceneGraph::new(nodes.clone(), edges)?);
        predictions.push(SceneGraph::new(nodes, pred_edges)?);
        captions.insert(image_id.clone(), caption_clauses.join(" and "));
        scenes.insert(
            image_id.clone(),
            SceneScript {
                scene_id: image_id.clone(),
                phrases,
            },
        );
        images.insert(
            image_id.clone(),
            ImageManifest {
                planted: planted_manifest,
                expected_hits,
                n_distractors: spec.distractors_per_image,
            },
        );
        image_ids.push(image_id);
    }

    let expected_recall: BTreeMap<String, f64> = spec
        .ks
        .iter()
        .map(|&k| {
            let recall = if total_planted == 0 {
                0.0
            } else {
                total_expected_hits[&k] as f64 / total_planted as f64
            };
            (format!("R@{k}"), recall)
        })
        .collect();

    let manifest = Manifest {
        seed: spec.seed,
        ks: spec.ks.clone(),
        novel_objects: vocab
            .novel_objects()
            .iter()
            .map(|&i| vocab.object_name(i).expect("in range").to_string())
            .collect(),
        novel_relations: vocab
            .novel_relations()
            .iter()
            .map(|&i| vocab.relation_name(i).expect("in range").to_string())
            .collect(),
        split_counts,
        expected_recall,
        images,
    };

    Ok(Scenario {
        vocabulary: vocab,
        image_ids,
        ground_truth,
        predictions,
        captions,
        scenes,
        manifest,
    })
}

/// Write a scenario to disk: `ground_truth.json` and `predictions.json`
/// (core fixture schema), `scenes/<id>.json` (grounding scripts),
/// `captions.tsv` (`image_id<TAB>caption` lines), and `manifest.json`.
pub fn write_scenario(scenario: &Scenario, dir: &Path) -> Result<()> {
    let scenes_dir = dir.join("scenes");
    std::fs::create_dir_all(&scenes_dir).map_err(|source| Error::Io {
        path: scenes_dir.clone(),
        source,
    })?;
    let fixture_of = |graphs: &[SceneGraph]| Fixture {
        vocabulary: scenario.vocabulary.clone(),
        graphs: graphs.to_vec(),
        embeddings: BTreeMap::new(),
    };
    save_fixture(
        dir.join("ground_truth.json"),
        &fixture_of(&scenario.ground_truth),
    )?;
    save_fixture(
        dir.join("predictions.json"),
        &fixture_of(&scenario.predictions),
    )?;
    for (image_id, script) in &scenario.scenes {
        let text = serde_json::to_string_pretty(script).expect("script serializes");
        atomic_write(
            scenes_dir.join(format!("{image_id}.json")),
            (text + "\n").as_bytes(),
        )?;
    }
    let mut captions = String::new();
    for (image_id, caption) in &scenario.captions {
        captions.push_str(image_id);
        captions.push('\t');
        captions.push_str(caption);
        captions.push('\n');
    }
    atomic_write(dir.join("captions.tsv"), captions.as_bytes())?;
    let manifest = serde_json::to_string_pretty(&scenario.manifest).expect("manifest serializes");
    atomic_write(dir.join("manifest.json"), (manifest + "\n").as_bytes())?;
    Ok(())
}
