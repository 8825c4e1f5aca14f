//! Interaction-consistent distillation objectives over edge-feature sets:
//! the point-wise visual retention loss, the cosine structure matrix, the
//! relational retention loss, and the combined training objective.
//!
//! Both distillation losses operate on the *negative* rows of aligned
//! student/teacher sets — pairs whose matched ground truth carries no
//! annotated relation — because those are exactly the rows with no direct
//! supervision signal of their own. With `n = |N|` negatives:
//!
//! ```text
//! L_vrd = (1/n)  · Σ_{i ∈ N} ‖e_S,i − e_T,i‖₁
//! L_rrd = (1/n²) · ‖M_S − M_T‖_F²      M[i][j] = cos(e_i, e_j)
//! ```
//!
//! VRD pins features point-wise; RRD pins only their pairwise similarity
//! structure and is invariant to per-row positive rescaling — the tests
//! construct an explicit witness separating the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::EmbeddingMatrix;
use crate::vecmath::{dot, l1_distance, norm};

/// Edge features with their negative-set membership mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatureSet {
    pub features: EmbeddingMatrix,
    /// `true` marks membership in the negative set N.
    pub negative_mask: Vec<bool>,
}

impl EdgeFeatureSet {
    /// Validated constructor: one mask entry per feature row.
    pub fn new(features: EmbeddingMatrix, negative_mask: Vec<bool>) -> Result<Self> {
        if negative_mask.len() != features.rows() {
            return Err(Error::DimMismatch {
                context: "EdgeFeatureSet: mask length vs feature rows",
                expected: features.rows(),
                got: negative_mask.len(),
            });
        }
        Ok(EdgeFeatureSet {
            features,
            negative_mask,
        })
    }

    /// Row indices of the negative set, ascending.
    pub fn negative_indices(&self) -> Vec<usize> {
        self.negative_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &neg)| neg.then_some(i))
            .collect()
    }
}

/// Weights of the two distillation terms in the combined objective.
/// Defaults 1.0 / 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            beta1: 1.0,
            beta2: 1.0,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta1 < 0.0 || self.beta2 < 0.0 {
            return Err(Error::config(format!(
                "distillation weights must be non-negative, got beta1={} beta2={}",
                self.beta1, self.beta2
            )));
        }
        Ok(())
    }
}

/// The six scalar parts of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub reg: f64,
    pub giou: f64,
    pub obj: f64,
    pub rel: f64,
    pub vrd: f64,
    pub rrd: f64,
}

fn check_aligned(student: &EdgeFeatureSet, teacher: &EdgeFeatureSet) -> Result<()> {
    if student.features.rows() != teacher.features.rows() {
        return Err(Error::DimMismatch {
            context: "edge feature sets: row counts",
            expected: teacher.features.rows(),
            got: student.features.rows(),
        });
    }
    if student.features.dim() != teacher.features.dim() {
        return Err(Error::DimMismatch {
            context: "edge feature sets: feature dims",
            expected: teacher.features.dim(),
            got: student.features.dim(),
        });
    }
    if student.negative_mask != teacher.negative_mask {
        return Err(Error::schema(
            "negative_mask",
            "student and teacher negative masks must be identical",
        ));
    }
    Ok(())
}

/// Point-wise visual retention loss and its gradient with respect to the
/// student rows: mean L1 distance over negative rows; gradient
/// `sign(e_S − e_T)/n` on negative rows, zero elsewhere.
pub fn vrd_loss(
    student: &EdgeFeatureSet,
    teacher: &EdgeFeatureSet,
) -> Result<(f64, EmbeddingMatrix)> {
    check_aligned(student, teacher)?;
    let negatives = student.negative_indices();
    if negatives.is_empty() {
        return Err(Error::Empty {
            what: "negative set for vrd_loss",
        });
    }
    let n = negatives.len() as f64;
    let dim = student.features.dim();
    let mut loss = 0.0;
    let mut grad = EmbeddingMatrix::zeros(student.features.rows(), dim);
    for &i in &negatives {
        let s = student.features.row(i);
        let t = teacher.features.row(i);
        loss += l1_distance(s, t);
        let g = grad.row_mut(i);
        for k in 0..dim {
            let d = s[k] - t[k];
            g[k] = d.signum() * f64::from(d != 0.0) / n;
        }
    }
    Ok((loss / n, grad))
}

/// Pairwise cosine-similarity matrix of the rows of `features`:
/// `M[i][j] = cos(e_i, e_j)`. Symmetric with unit diagonal. Errors on any
/// zero-norm row.
pub fn structure_matrix(features: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let n = features.rows();
    let units = unit_rows(features)?;
    let mut m = EmbeddingMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j {
                1.0
            } else {
                dot(&units[i], &units[j])
            };
            m.row_mut(i)[j] = v;
        }
    }
    Ok(m)
}

/// L2-normalized copies of all rows; errors on a zero-norm row.
fn unit_rows(features: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
    let mut units = Vec::with_capacity(features.rows());
    for (i, row) in features.iter_rows().enumerate() {
        let len = norm(row);
        if len == 0.0 {
            return Err(Error::ZeroNormRow { row: i });
        }
        units.push(row.iter().map(|v| v / len).collect());
    }
    Ok(units)
}

/// Relational retention loss over the negative rows and its gradient with
/// respect to the student rows.
///
/// With `u_i` the unit student rows, `M = u·uᵀ`, and `D = M_S − M_T`:
///
/// ```text
/// L = (1/n²)·‖D‖_F²
/// ∂L/∂e_i = (4/n²) · Σ_{j≠i} D_ij · (u_j − M_ij·u_i) / ‖e_i‖
/// ```
///
/// (the factor 4 collects the symmetric (i,j)/(j,i) contributions of the
/// squared Frobenius norm; the diagonal is constant and contributes
/// nothing).
pub fn rrd_loss(
    student: &EdgeFeatureSet,
    teacher: &EdgeFeatureSet,
) -> Result<(f64, EmbeddingMatrix)> {
    check_aligned(student, teacher)?;
    let negatives = student.negative_indices();
    if negatives.is_empty() {
        return Err(Error::Empty {
            what: "negative set for rrd_loss",
        });
    }
    let n = negatives.len();
    let dim = student.features.dim();

    let gather = |set: &EdgeFeatureSet| -> Result<EmbeddingMatrix> {
        let mut data = Vec::with_capacity(n * dim);
        for &i in &negatives {
            data.extend_from_slice(set.features.row(i));
        }
        EmbeddingMatrix::from_flat(n, dim, data)
    };
    let s_neg = gather(student)?;
    let t_neg = gather(teacher)?;

    // Remap zero-norm errors back to original row indices.
    let remap = |err: Error| match err {
        Error::ZeroNormRow { row } => Error::ZeroNormRow {
            row: negatives[row],
        },
        other => other,
    };
    let m_s = structure_matrix(&s_neg).map_err(remap)?;
    let m_t = structure_matrix(&t_neg).map_err(remap)?;
    let units = unit_rows(&s_neg).expect("norms already checked");

    let n_f = n as f64;
    let mut loss = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = m_s.row(i)[j] - m_t.row(i)[j];
            loss += d * d;
        }
    }
    loss /= n_f * n_f;

    let mut grad = EmbeddingMatrix::zeros(student.features.rows(), dim);
    for (a, &orig_row) in negatives.iter().enumerate() {
        let len = norm(s_neg.row(a));
        let g = grad.row_mut(orig_row);
        for b in 0..n {
            if b == a {
                continue;
            }
            let d_ab = m_s.row(a)[b] - m_t.row(a)[b];
            let m_ab = m_s.row(a)[b];
            let coeff = 4.0 / (n_f * n_f) * d_ab / len;
            for k in 0..dim {
                g[k] += coeff * (units[b][k] - m_ab * units[a][k]);
            }
        }
    }
    Ok((loss, grad))
}

/// Combined training objective:
/// `reg + giou + obj + rel + β1·vrd + β2·rrd`.
pub fn total_loss(parts: &LossParts, cfg: &DistillConfig) -> Result<f64> {
    cfg.validate()?;
    let values = [
        parts.reg, parts.giou, parts.obj, parts.rel, parts.vrd, parts.rrd,
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "total_loss parts",
        });
    }
    Ok(parts.reg
        + parts.giou
        + parts.obj
        + parts.rel
        + cfg.beta1 * parts.vrd
        + cfg.beta2 * parts.rrd)
}
