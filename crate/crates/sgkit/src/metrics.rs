//! Scene-graph-detection evaluation: triplet recall R@K and mean recall
//! mR@K under IoU-gated matching, reported over the full edge set and per
//! open-vocabulary split (base, novel-object, novel-relation, novel-both).
//!
//! A ground-truth triplet counts as hit when some top-K prediction has
//! the identical (subject class, relation, object class) triple and both
//! endpoint boxes overlap the ground truth at or above the IoU gate.
//! Matching is one-to-one and greedy: predictions are visited in rank
//! order and each consumes the lowest-index compatible ground-truth edge
//! still available.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::types::{split_report, EdgeSplit, SceneGraph, Vocabulary};

/// How a prediction's three component scores fold into one ranking score.
/// The two modes order identically; only the reported magnitude differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankScore {
    #[default]
    Product,
    SumLogs,
}

/// Evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Recall cutoffs, strictly ascending.
    pub ks: Vec<usize>,
    /// IoU gate applied to both subject and object boxes.
    pub iou_threshold: f64,
    /// When set, at most one predicted relation per ordered node pair is
    /// counted (the best-scoring one).
    pub graph_constraint: bool,
    pub rank_score: RankScore,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: vec![20, 50, 100],
            iou_threshold: 0.5,
            graph_constraint: false,
            rank_score: RankScore::Product,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() {
            return Err(Error::config("ks must be non-empty"));
        }
        for k in &self.ks {
            if *k == 0 {
                return Err(Error::config("recall cutoffs must be ≥ 1"));
            }
        }
        if !self.ks.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config(format!(
                "ks must be strictly ascending (got {:?})",
                self.ks
            )));
        }
        if !(0.0..=1.0).contains(&self.iou_threshold) || !self.iou_threshold.is_finite() {
            return Err(Error::config(format!(
                "iou_threshold must lie in [0,1] (got {})",
                self.iou_threshold
            )));
        }
        Ok(())
    }
}

/// Recall tables keyed by split and cutoff, plus the per-relation-class
/// recalls behind mR@K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// split name → "R@K" → recall.
    pub recalls: BTreeMap<String, BTreeMap<String, f64>>,
    /// "mR@K" → mean of per-relation-class recalls (classes with ≥ 1 GT).
    pub mean_recalls: BTreeMap<String, f64>,
    /// relation class name → "R@K" → recall, classes with ≥ 1 GT only.
    pub per_relation: BTreeMap<String, BTreeMap<String, f64>>,
    /// split name → number of GT triplets.
    pub counts: BTreeMap<String, usize>,
}

/// Splits reported alongside the full edge set.
const ALL_SPLIT: &str = "all";

impl EvalReport {
    pub fn recall(&self, split: &str, k: usize) -> Option<f64> {
        self.recalls.get(split)?.get(&format!("R@{k}")).copied()
    }

    pub fn mean_recall(&self, k: usize) -> Option<f64> {
        self.mean_recalls.get(&format!("mR@{k}")).copied()
    }

    /// The pinned report shape: one object per split at top level, the
    /// flat "mR@K" entries beside them, and a "counts" object.
    pub fn to_json(&self) -> serde_json::Value {
        let mut top = serde_json::Map::new();
        for (split, table) in &self.recalls {
            top.insert(
                split.clone(),
                serde_json::to_value(table).expect("recall table serializes"),
            );
        }
        for (name, value) in &self.mean_recalls {
            top.insert(name.clone(), serde_json::json!(value));
        }
        top.insert(
            "per_relation".to_string(),
            serde_json::to_value(&self.per_relation).expect("per-relation table serializes"),
        );
        top.insert(
            "counts".to_string(),
            serde_json::to_value(&self.counts).expect("counts serialize"),
        );
        serde_json::Value::Object(top)
    }
}

/// Ranking score of one predicted edge.
fn triplet_score(pred: &SceneGraph, edge_idx: usize, mode: RankScore) -> f64 {
    let edge = &pred.edges()[edge_idx];
    let s = pred.nodes()[edge.subject].score;
    let o = pred.nodes()[edge.object].score;
    match mode {
        RankScore::Product => s * edge.score * o,
        RankScore::SumLogs => s.ln() + edge.score.ln() + o.ln(),
    }
}

/// Predicted edge indices in rank order (descending score, ties by lower
/// edge index), truncated to `k`, with the graph constraint applied first
/// when enabled.
fn ranked_top_k(pred: &SceneGraph, cfg: &EvalConfig, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pred.edges().len()).collect();
    let scores: Vec<f64> = order
        .iter()
        .map(|&e| triplet_score(pred, e, cfg.rank_score))
        .collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are never NaN for valid graphs")
            .then(a.cmp(&b))
    });
    let mut kept = Vec::with_capacity(order.len().min(k));
    let mut seen_pairs = BTreeSet::new();
    for e in order {
        if cfg.graph_constraint {
            let edge = &pred.edges()[e];
            if !seen_pairs.insert((edge.subject, edge.object)) {
                continue;
            }
        }
        kept.push(e);
        if kept.len() == k {
            break;
        }
    }
    kept
}

/// Greedy one-to-one matching of the top-K predictions against ground
/// truth; returns the hit GT edge indices.
pub fn match_triplets(
    pred: &SceneGraph,
    gt: &SceneGraph,
    cfg: &EvalConfig,
    k: usize,
) -> Result<BTreeSet<usize>> {
    cfg.validate()?;
    let mut hits = BTreeSet::new();
    let mut consumed = vec![false; gt.edges().len()];
    for pred_edge_idx in ranked_top_k(pred, cfg, k) {
        let pe = &pred.edges()[pred_edge_idx];
        let p_sub = &pred.nodes()[pe.subject];
        let p_obj = &pred.nodes()[pe.object];
        for (gt_idx, ge) in gt.edges().iter().enumerate() {
            if consumed[gt_idx] {
                continue;
            }
            let g_sub = &gt.nodes()[ge.subject];
            let g_obj = &gt.nodes()[ge.object];
            let classes_match = p_sub.class_id == g_sub.class_id
                && pe.relation == ge.relation
                && p_obj.class_id == g_obj.class_id;
            if classes_match
                && iou(&p_sub.bbox, &g_sub.bbox) >= cfg.iou_threshold
                && iou(&p_obj.bbox, &g_obj.bbox) >= cfg.iou_threshold
            {
                consumed[gt_idx] = true;
                hits.insert(gt_idx);
                break;
            }
        }
    }
    Ok(hits)
}

/// Evaluate aligned prediction/ground-truth graph lists into recall
/// tables. Splits with zero GT triplets report recall 0.0; relation
/// classes with zero GT are excluded from mR@K.
pub fn evaluate(
    preds: &[SceneGraph],
    gts: &[SceneGraph],
    vocab: &Vocabulary,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    if preds.len() != gts.len() {
        return Err(Error::DimMismatch {
            context: "evaluate: predictions vs ground truth images",
            expected: gts.len(),
            got: preds.len(),
        });
    }
    let split_names: Vec<String> = std::iter::once(ALL_SPLIT.to_string())
        .chain(EdgeSplit::all().iter().map(|s| s.as_str().to_string()))
        .collect();
    let mut gt_per_split: BTreeMap<String, usize> =
        split_names.iter().map(|s| (s.clone(), 0)).collect();
    let mut hits_per_split: BTreeMap<(String, usize), usize> = BTreeMap::new();
    let mut gt_per_relation: BTreeMap<usize, usize> = BTreeMap::new();
    let mut hits_per_relation: BTreeMap<(usize, usize), usize> = BTreeMap::new();

    for (pred, gt) in preds.iter().zip(gts) {
        let splits = split_report(gt, vocab)?;
        // Validate prediction classes against the vocabulary too.
        for (i, node) in pred.nodes().iter().enumerate() {
            if node.class_id >= vocab.n_objects() {
                return Err(Error::ClassOutOfRange {
                    kind: "object",
                    id: node.class_id,
                    len: vocab.n_objects(),
                });
            }
            let _ = i;
        }
        for edge in pred.edges() {
            if edge.relation >= vocab.n_relations() {
                return Err(Error::ClassOutOfRange {
                    kind: "relation",
                    id: edge.relation,
                    len: vocab.n_relations(),
                });
            }
        }
        for (edge, split) in gt.edges().iter().zip(&splits) {
            *gt_per_split.get_mut(ALL_SPLIT).expect("all split present") += 1;
            *gt_per_split
                .get_mut(split.as_str())
                .expect("tag splits present") += 1;
            *gt_per_relation.entry(edge.relation).or_insert(0) += 1;
        }
        for &k in &cfg.ks {
            let hits = match_triplets(pred, gt, cfg, k)?;
            for &gt_idx in &hits {
                let split = splits[gt_idx].as_str().to_string();
                *hits_per_split
                    .entry((ALL_SPLIT.to_string(), k))
                    .or_insert(0) += 1;
                *hits_per_split.entry((split, k)).or_insert(0) += 1;
                let relation = gt.edges()[gt_idx].relation;
                *hits_per_relation.entry((relation, k)).or_insert(0) += 1;
            }
        }
    }

    let mut recalls: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for split in &split_names {
        let total = gt_per_split[split];
        let mut table = BTreeMap::new();
        for &k in &cfg.ks {
            let hits = hits_per_split
                .get(&(split.clone(), k))
                .copied()
                .unwrap_or(0);
            let recall = if total == 0 {
                0.0
            } else {
                hits as f64 / total as f64
            };
            table.insert(format!("R@{k}"), recall);
        }
        recalls.insert(split.clone(), table);
    }

    let mut per_relation: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut mean_recalls: BTreeMap<String, f64> = BTreeMap::new();
    for &k in &cfg.ks {
        let mut sum = 0.0;
        for (&relation, &total) in &gt_per_relation {
            let hits = hits_per_relation.get(&(relation, k)).copied().unwrap_or(0);
            let recall = hits as f64 / total as f64;
            sum += recall;
            per_relation
                .entry(
                    vocab
                        .relation_name(relation)
                        .expect("validated relation id")
                        .to_string(),
                )
                .or_default()
                .insert(format!("R@{k}"), recall);
        }
        let n_classes = gt_per_relation.len();
        mean_recalls.insert(
            format!("mR@{k}"),
            if n_classes == 0 {
                0.0
            } else {
                sum / n_classes as f64
            },
        );
    }

    Ok(EvalReport {
        recalls,
        mean_recalls,
        per_relation,
        counts: gt_per_split,
    })
}
