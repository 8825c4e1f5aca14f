//! Box algebra: IoU, generalized IoU, and the pairwise spatial cost terms
//! consumed by matching, target combination, and evaluation.
//!
//! All functions are pure and operate on valid [`BoundingBox`] values.
//! Degenerate (zero-area) boxes cannot normally be constructed, but the
//! formulas stay well-defined if one slips through via direct field
//! mutation: IoU of a zero-area box is 0 unless both boxes are degenerate
//! *and* identical, which scores 1.

use crate::types::BoundingBox;

/// Spatial cost terms for one (prediction, ground-truth) box pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxPairCost {
    /// Mean absolute difference over the four center-format coordinates.
    pub l1: f64,
    /// `1 − GIoU`, in `[0, 2]`.
    pub giou_cost: f64,
}

/// Guard for divisions by the enclosing-hull area.
const HULL_EPSILON: f64 = 1e-12;

/// Intersection area of two boxes (0 when they do not overlap).
fn intersection_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax1, ay1, ax2, ay2) = a.corners();
    let (bx1, by1, bx2, by2) = b.corners();
    let iw = (ax2.min(bx2) - ax1.max(bx1)).max(0.0);
    let ih = (ay2.min(by2) - ay1.max(by1)).max(0.0);
    iw * ih
}

/// Intersection over union, in `[0, 1]`. Symmetric; 1 iff the boxes are
/// identical, 0 iff their interiors are disjoint.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area().max(0.0) + b.area().max(0.0) - inter;
    if union <= 0.0 {
        // Both boxes degenerate: identical counts as a perfect match.
        return if a == b { 1.0 } else { 0.0 };
    }
    inter / union
}

/// Generalized IoU, in `[−1, 1]`: IoU minus the fraction of the enclosing
/// hull not covered by the union. Equals IoU exactly when the hull equals
/// the union; symmetric.
pub fn giou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area().max(0.0) + b.area().max(0.0) - inter;
    let (ax1, ay1, ax2, ay2) = a.corners();
    let (bx1, by1, bx2, by2) = b.corners();
    let hull = (ax2.max(bx2) - ax1.min(bx1)) * (ay2.max(by2) - ay1.min(by1));
    let base = iou(a, b);
    if hull <= HULL_EPSILON {
        return base;
    }
    base - (hull - union) / hull
}

/// Both spatial cost terms for a prediction/ground-truth pair: mean
/// absolute center-format coordinate difference and `1 − GIoU`.
pub fn box_pair_cost(pred: &BoundingBox, gt: &BoundingBox) -> BoxPairCost {
    let l1 = ((pred.cx - gt.cx).abs()
        + (pred.cy - gt.cy).abs()
        + (pred.w - gt.w).abs()
        + (pred.h - gt.h).abs())
        / 4.0;
    BoxPairCost {
        l1,
        giou_cost: 1.0 - giou(pred, gt),
    }
}
