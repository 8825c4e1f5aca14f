//! Interaction-guided query selection: relevance scoring of visual tokens
//! against object/relation class embeddings, top-K initialization,
//! decomposition of predicted triplets into interaction prompts, and the
//! second-pass split into interaction-selected and missing-object queries.
//!
//! Selection runs in two passes. Pass 1 ranks every visual token by a
//! geometric blend of its best object similarity and best relation
//! similarity and keeps the top K. The stub model predicts triplets from
//! those, each triplet decomposes into "subject predicate" /
//! "predicate object" phrases, and pass 2 re-selects: L tokens by
//! similarity to the encoded phrases, then K−L more by object relevance
//! from the remainder.

use crate::error::{Error, Result};
use crate::types::{EmbeddingMatrix, TripletCandidate};
use crate::vecmath::dot;

/// Floor applied to similarities before fractional exponentiation.
pub const SIMILARITY_CLAMP: f64 = 1e-6;

/// Sizes and blend parameter for query selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    /// Total query count K.
    pub k: usize,
    /// Interaction query count L, 1 ≤ L ≤ K.
    pub l: usize,
    /// Blend between object relevance (γ → 1) and relation relevance
    /// (γ → 0) in pass 1.
    pub gamma: f64,
}

impl SelectionConfig {
    pub fn new(k: usize, l: usize, gamma: f64) -> Result<Self> {
        let cfg = SelectionConfig { k, l, gamma };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults for unstated knobs: L = ⌊K/2⌋ (at least 1), γ = 0.5.
    pub fn with_defaults(k: usize) -> Result<Self> {
        SelectionConfig::new(k, (k / 2).max(1), 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("selection K must be ≥ 1"));
        }
        if self.l == 0 || self.l > self.k {
            return Err(Error::config(format!(
                "selection L must satisfy 1 ≤ L ≤ K (got L={}, K={})",
                self.l, self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !self.gamma.is_finite() {
            return Err(Error::config(format!(
                "gamma must lie in [0,1] (got {})",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Outcome of the second selection pass.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SelectionResult {
    /// I_L^in — tokens chosen by interaction similarity, score order.
    pub indices_interaction: Vec<usize>,
    /// I_{K−L}^o — remaining tokens chosen by object relevance, score order.
    pub indices_missing: Vec<usize>,
    /// I_K — the union, interaction block first.
    pub indices_all: Vec<usize>,
    /// Selection score of each entry of `indices_all` (interaction
    /// similarity for the first block, object relevance for the second).
    pub scores: Vec<f64>,
}

/// Interaction phrases decomposed from predicted triplets.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct InteractionPromptSet {
    /// "subject predicate" and "predicate object" strings, first-occurrence
    /// order, deduplicated.
    pub pairs: Vec<String>,
}

/// Best similarity of `v` against any row of `class_embeddings`.
fn max_similarity(v: &[f64], class_embeddings: &EmbeddingMatrix) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for c in 0..class_embeddings.rows() {
        best = best.max(dot(v, class_embeddings.row(c)));
    }
    best
}

/// One factor of the blended relevance score. Exponents 0 and 1 are exact
/// identities (no clamping), so the γ ∈ {0,1} boundaries reduce to the
/// raw similarities; fractional exponents clamp the base positive first.
fn powered(term: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else if exponent == 1.0 {
        term
    } else {
        term.max(SIMILARITY_CLAMP).powf(exponent)
    }
}

/// Blended token relevance:
/// `s_i = (max_j v_i·t_o_j)^γ · (max_k v_i·t_r_k)^(1−γ)`.
pub fn relevance_scores(
    visual: &EmbeddingMatrix,
    t_obj: &EmbeddingMatrix,
    t_rel: &EmbeddingMatrix,
    gamma: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
        return Err(Error::config(format!(
            "gamma must lie in [0,1] (got {gamma})"
        )));
    }
    if t_obj.is_empty() {
        return Err(Error::Empty {
            what: "object class embeddings",
        });
    }
    if t_rel.is_empty() {
        return Err(Error::Empty {
            what: "relation class embeddings",
        });
    }
    for (name, m) in [("object", &t_obj), ("relation", &t_rel)] {
        if !visual.is_empty() && m.dim() != visual.dim() {
            return Err(Error::DimMismatch {
                context: match name {
                    "object" => "relevance_scores: object class dim",
                    _ => "relevance_scores: relation class dim",
                },
                expected: visual.dim(),
                got: m.dim(),
            });
        }
    }
    let mut scores = Vec::with_capacity(visual.rows());
    for i in 0..visual.rows() {
        let v = visual.row(i);
        let s_obj = max_similarity(v, t_obj);
        let s_rel = max_similarity(v, t_rel);
        scores.push(powered(s_obj, gamma) * powered(s_rel, 1.0 - gamma));
    }
    Ok(scores)
}

/// Indices of the `k` largest scores, descending; ties prefer the lower
/// index.
pub fn top_k(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > scores.len() {
        return Err(Error::config(format!(
            "top_k: K={} exceeds token count {}",
            k,
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores must be comparable")
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(order)
}

/// Decompose each triplet ⟨s, p, o⟩ into the phrases "s p" and "p o",
/// deduplicated in first-occurrence order.
pub fn decompose_triplets(triplets: &[TripletCandidate]) -> InteractionPromptSet {
    let mut pairs: Vec<String> = Vec::new();
    let mut push = |phrase: String| {
        if !pairs.contains(&phrase) {
            pairs.push(phrase);
        }
    };
    for t in triplets {
        push(format!("{} {}", t.subject_label, t.relation_label));
        push(format!("{} {}", t.relation_label, t.object_label));
    }
    InteractionPromptSet { pairs }
}

/// Second-pass selection: L tokens by interaction similarity, then K−L by
/// object relevance over the remainder; the result always holds exactly K
/// distinct indices. An empty interaction set degrades to a pure
/// object-relevance top-K (all of it reported in `indices_missing`).
pub fn interaction_select(
    visual: &EmbeddingMatrix,
    t_in: &EmbeddingMatrix,
    t_obj: &EmbeddingMatrix,
    cfg: &SelectionConfig,
) -> Result<SelectionResult> {
    cfg.validate()?;
    if cfg.k > visual.rows() {
        return Err(Error::config(format!(
            "selection K={} exceeds visual token count {}",
            cfg.k,
            visual.rows()
        )));
    }
    if t_obj.is_empty() {
        return Err(Error::Empty {
            what: "object class embeddings",
        });
    }
    for (context, m) in [
        ("interaction_select: object class dim", t_obj),
        ("interaction_select: interaction prompt dim", t_in),
    ] {
        if !m.is_empty() && m.dim() != visual.dim() {
            return Err(Error::DimMismatch {
                context,
                expected: visual.dim(),
                got: m.dim(),
            });
        }
    }
    let s_obj: Vec<f64> = (0..visual.rows())
        .map(|i| max_similarity(visual.row(i), t_obj))
        .collect();
    if t_in.is_empty() {
        let indices = top_k(&s_obj, cfg.k)?;
        let scores = indices.iter().map(|&i| s_obj[i]).collect();
        return Ok(SelectionResult {
            indices_interaction: Vec::new(),
            indices_missing: indices.clone(),
            indices_all: indices,
            scores,
        });
    }
    let s_in: Vec<f64> = (0..visual.rows())
        .map(|i| max_similarity(visual.row(i), t_in))
        .collect();
    let indices_interaction = top_k(&s_in, cfg.l)?;
    let chosen: std::collections::BTreeSet<usize> = indices_interaction.iter().copied().collect();
    // Rank the complement by object relevance: bury already-chosen
    // indices at −∞ so the interaction block is never duplicated.
    let masked: Vec<f64> = s_obj
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if chosen.contains(&i) {
                f64::NEG_INFINITY
            } else {
                s
            }
        })
        .collect();
    let indices_missing = top_k(&masked, cfg.k - cfg.l)?;
    let mut indices_all = indices_interaction.clone();
    indices_all.extend_from_slice(&indices_missing);
    let mut scores: Vec<f64> = indices_interaction.iter().map(|&i| s_in[i]).collect();
    scores.extend(indices_missing.iter().map(|&i| s_obj[i]));
    Ok(SelectionResult {
        indices_interaction,
        indices_missing,
        indices_all,
        scores,
    })
}
