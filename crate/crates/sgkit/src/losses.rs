//! Training objective components: sigmoid focal loss for entity classes,
//! binary cross-entropy for relation classes, and L1+GIoU box regression
//! — every one paired with its closed-form gradient.
//!
//! Focal and BCE operate on raw logits with a ±30 clamp before the
//! sigmoid for double-precision safety. Box regression operates on
//! center-format parameters; the GIoU gradient is derived in corner space
//! and chained back through the center-format parameterization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::giou;
use crate::types::BoundingBox;

/// Largest logit magnitude fed to `exp`; values outside are clamped.
pub const LOGIT_CLAMP: f64 = 30.0;

/// Reduction applied over the per-class terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

/// Focal-loss hyperparameters. Defaults α = 0.25, γ = 2 (detection
/// convention), mean reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub focal_alpha: f64,
    pub focal_gamma: f64,
    pub reduction: Reduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            focal_alpha: 0.25,
            focal_gamma: 2.0,
            reduction: Reduction::Mean,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.focal_alpha) || !self.focal_alpha.is_finite() {
            return Err(Error::config(format!(
                "focal_alpha {} outside [0,1]",
                self.focal_alpha
            )));
        }
        if self.focal_gamma < 0.0 || !self.focal_gamma.is_finite() {
            return Err(Error::config(format!(
                "focal_gamma {} must be ≥ 0",
                self.focal_gamma
            )));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Sigmoid focal loss over per-class logits with a single positive class.
///
/// Per class `k` with `p = σ(logit_k)`:
/// positive: `−α·(1−p)^γ·ln p`; negative: `−(1−α)·p^γ·ln(1−p)`;
/// reduced per `cfg.reduction`. Returns the loss and its gradient with
/// respect to the logits.
pub fn focal_loss(
    logits: &[f64],
    target_class: usize,
    cfg: &LossConfig,
) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    if logits.is_empty() {
        return Err(Error::Empty {
            what: "focal_loss logits",
        });
    }
    if target_class >= logits.len() {
        return Err(Error::ClassOutOfRange {
            kind: "target",
            id: target_class,
            len: logits.len(),
        });
    }
    let (alpha, gamma) = (cfg.focal_alpha, cfg.focal_gamma);
    let mut total = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for (k, &z) in logits.iter().enumerate() {
        let zc = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
        let p = sigmoid(zc);
        let q = sigmoid(-zc); // 1 − p without cancellation
        let ln_p = -(-zc).exp().ln_1p();
        let ln_q = -zc.exp().ln_1p();
        let positive = k == target_class;
        let (loss_k, grad_k) = if gamma == 0.0 {
            // Plain α-weighted BCE; avoids 0·∞ in the general formula.
            if positive {
                (-alpha * ln_p, -alpha * q)
            } else {
                (-(1.0 - alpha) * ln_q, (1.0 - alpha) * p)
            }
        } else if positive {
            let loss = -alpha * q.powf(gamma) * ln_p;
            let g = alpha * (gamma * p * q.powf(gamma) * ln_p - q.powf(gamma + 1.0));
            (loss, g)
        } else {
            let loss = -(1.0 - alpha) * p.powf(gamma) * ln_q;
            let g = (1.0 - alpha) * (p.powf(gamma + 1.0) - gamma * p.powf(gamma) * q * ln_q);
            (loss, g)
        };
        total += loss_k;
        grad[k] = grad_k;
    }
    if cfg.reduction == Reduction::Mean {
        let n = logits.len() as f64;
        total /= n;
        for g in &mut grad {
            *g /= n;
        }
    }
    Ok((total, grad))
}

/// Binary cross-entropy with logits over multi-hot relation targets,
/// mean-reduced. Returns the loss and its gradient with respect to the
/// logits: `(σ(z_k) − t_k)/n`.
pub fn bce_relation_loss(logits: &[f64], targets: &[bool]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != targets.len() {
        return Err(Error::DimMismatch {
            context: "bce_relation_loss: logits vs targets",
            expected: targets.len(),
            got: logits.len(),
        });
    }
    if logits.is_empty() {
        return Err(Error::Empty {
            what: "bce_relation_loss logits",
        });
    }
    let n = logits.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &t) in logits.iter().zip(targets) {
        let zc = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
        let t = f64::from(t);
        // Stable form: max(z,0) − z·t + ln(1 + e^{−|z|}).
        total += zc.max(0.0) - zc * t + (-zc.abs()).exp().ln_1p();
        grad.push((sigmoid(zc) - t) / n);
    }
    Ok((total / n, grad))
}

/// L1 and GIoU regression losses for one box pair, with analytic
/// gradients with respect to the predicted `(cx, cy, w, h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegression {
    /// Mean absolute center-format coordinate difference.
    pub l1_loss: f64,
    /// `1 − GIoU(pred, gt)`.
    pub giou_loss: f64,
    /// Gradient of `l1_loss` in `(cx, cy, w, h)` order.
    pub l1_grad: [f64; 4],
    /// Gradient of `giou_loss` in `(cx, cy, w, h)` order.
    pub giou_grad: [f64; 4],
}

/// Margin by which a box pair must clear the GIoU non-smooth set
/// (corner ties, zero-extent intersections) before a finite-difference
/// comparison of the gradient is meaningful. Keep any probe step well
/// below this.
pub const GIOU_SMOOTH_MARGIN: f64 = 1e-4;

/// Whether `(pred, gt)` sits at least [`GIOU_SMOOTH_MARGIN`] away from
/// every non-smooth GIoU configuration: no predicted corner coordinate
/// tied with the matching ground-truth corner coordinate, and no
/// intersection extent within the margin of zero. Finite-difference
/// checks of `giou_grad` are only valid on pairs passing this predicate.
pub fn giou_clear_of_nonsmooth(pred: &BoundingBox, gt: &BoundingBox) -> bool {
    let (px1, py1, px2, py2) = pred.corners();
    let (gx1, gy1, gx2, gy2) = gt.corners();
    for (a, b) in [(px1, gx1), (py1, gy1), (px2, gx2), (py2, gy2)] {
        if (a - b).abs() < GIOU_SMOOTH_MARGIN {
            return false;
        }
    }
    let iw = px2.min(gx2) - px1.max(gx1);
    let ih = py2.min(gy2) - py1.max(gy1);
    iw.abs() >= GIOU_SMOOTH_MARGIN && ih.abs() >= GIOU_SMOOTH_MARGIN
}

/// Box regression losses and gradients.
///
/// The GIoU gradient is exact wherever GIoU is differentiable; on the
/// measure-zero non-smooth set (a predicted corner exactly tied with a
/// ground-truth corner, or an intersection extent exactly zero) it
/// returns one of the valid one-sided derivatives. The L1 gradient at a
/// coordinate tie is 0.
pub fn box_regression_loss(pred: &BoundingBox, gt: &BoundingBox) -> BoxRegression {
    // --- L1 on center format, mean over the four coordinates.
    let deltas = [
        pred.cx - gt.cx,
        pred.cy - gt.cy,
        pred.w - gt.w,
        pred.h - gt.h,
    ];
    let l1_loss = deltas.iter().map(|d| d.abs()).sum::<f64>() / 4.0;
    let mut l1_grad = [0.0; 4];
    for (g, d) in l1_grad.iter_mut().zip(&deltas) {
        *g = d.signum() * f64::from(*d != 0.0) / 4.0;
    }

    // --- GIoU in corner space: p = (px1, py1, px2, py2).
    let (px1, py1, px2, py2) = pred.corners();
    let (gx1, gy1, gx2, gy2) = gt.corners();
    let (pw, ph) = (px2 - px1, py2 - py1);
    let area_p = pw * ph;
    let area_g = (gx2 - gx1) * (gy2 - gy1);
    let iw = px2.min(gx2) - px1.max(gx1);
    let ih = py2.min(gy2) - py1.max(gy1);
    let overlapping = iw > 0.0 && ih > 0.0;
    let inter = if overlapping { iw * ih } else { 0.0 };
    let union = area_p + area_g - inter;
    let (hw, hh) = (px2.max(gx2) - px1.min(gx1), py2.max(gy2) - py1.min(gy1));
    let hull = hw * hh;

    // Partials with respect to corners, order (px1, py1, px2, py2).
    let mut d_inter = [0.0; 4];
    if overlapping {
        if px1 > gx1 {
            d_inter[0] = -ih;
        }
        if py1 > gy1 {
            d_inter[1] = -iw;
        }
        if px2 < gx2 {
            d_inter[2] = ih;
        }
        if py2 < gy2 {
            d_inter[3] = iw;
        }
    }
    let d_area_p = [-ph, -pw, ph, pw];
    let mut d_hull = [0.0; 4];
    if px1 < gx1 {
        d_hull[0] = -hh;
    }
    if py1 < gy1 {
        d_hull[1] = -hw;
    }
    if px2 > gx2 {
        d_hull[2] = hh;
    }
    if py2 > gy2 {
        d_hull[3] = hw;
    }

    // giou = I/U + U/H − 1, so
    // d giou = (dI·U − I·dU)/U² + (dU·H − U·dH)/H².
    let mut d_corner = [0.0; 4];
    let u2 = union * union;
    let h2 = hull * hull;
    for k in 0..4 {
        let d_union = d_area_p[k] - d_inter[k];
        let mut d = 0.0;
        if u2 > 1e-24 {
            d += (d_inter[k] * union - inter * d_union) / u2;
        }
        if h2 > 1e-24 {
            d += (d_union * hull - union * d_hull[k]) / h2;
        }
        d_corner[k] = d;
    }

    // Chain corners back to center format:
    // px1 = cx − w/2, px2 = cx + w/2 ⇒ ∂/∂cx = ∂/∂px1 + ∂/∂px2,
    // ∂/∂w = (−∂/∂px1 + ∂/∂px2)/2; same pattern on y. The loss is
    // 1 − giou, hence the negations.
    let giou_grad = [
        -(d_corner[0] + d_corner[2]),
        -(d_corner[1] + d_corner[3]),
        -(-d_corner[0] + d_corner[2]) / 2.0,
        -(-d_corner[1] + d_corner[3]) / 2.0,
    ];

    BoxRegression {
        l1_loss,
        giou_loss: 1.0 - giou(pred, gt),
        l1_grad,
        giou_grad,
    }
}
