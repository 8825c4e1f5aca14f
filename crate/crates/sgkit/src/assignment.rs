//! Bipartite matching of predicted queries to ground-truth entities: a
//! combined semantic+spatial cost and an exact O(n³) Hungarian solver.
//!
//! The solver is the potentials (Jonker–Volgenant style) formulation of
//! the Hungarian algorithm. Desk-scale problems are tiny, so exactness is
//! cheap, and exactness is what lets the brute-force permutation oracle in
//! the tests assert equality rather than approximation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::box_pair_cost;
use crate::types::{BoundingBox, EmbeddingMatrix, SceneGraph};

/// Weights of the three cost terms. Defaults follow detection-transformer
/// convention: class 2, L1 5, GIoU 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub w_cls: f64,
    pub w_l1: f64,
    pub w_giou: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            w_cls: 2.0,
            w_l1: 5.0,
            w_giou: 2.0,
        }
    }
}

/// Dense rows×cols cost matrix with finite entries. Rows are predictions,
/// columns ground-truth entities; rows ≥ cols is the common shape (extra
/// predictions stay unmatched).
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    /// Build from a flat row-major buffer. Errors on length mismatch or
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                context: "CostMatrix::new",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "CostMatrix",
            });
        }
        Ok(CostMatrix { rows, cols, data })
    }

    /// Build cell-by-cell from a function of (row, col).
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let data = (0..rows * cols)
            .map(|k| f(k / cols.max(1), k % cols.max(1)))
            .collect();
        CostMatrix::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }
}

/// One-to-one assignment between predictions and ground truth.
///
/// `pairs` holds `(pred_idx, gt_idx)` sorted by prediction index; its
/// length is `min(rows, cols)` and `total_cost` is the sum of the selected
/// cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Combined matching cost between predictions and ground-truth nodes:
///
/// ```text
/// cost[i][j] = −w_cls·score_i[class_j] + w_l1·l1(box_i, box_j) + w_giou·(1 − giou(box_i, box_j))
/// ```
///
/// `pred_class_scores` has one row per prediction over the object classes;
/// ground-truth class ids index its columns.
pub fn build_cost(
    pred_boxes: &[BoundingBox],
    pred_class_scores: &EmbeddingMatrix,
    gt: &SceneGraph,
    weights: CostWeights,
) -> Result<CostMatrix> {
    if weights.w_cls < 0.0 || weights.w_l1 < 0.0 || weights.w_giou < 0.0 {
        return Err(Error::config(format!(
            "cost weights must be non-negative, got {weights:?}"
        )));
    }
    if pred_class_scores.rows() != pred_boxes.len() {
        return Err(Error::DimMismatch {
            context: "build_cost: score rows vs prediction boxes",
            expected: pred_boxes.len(),
            got: pred_class_scores.rows(),
        });
    }
    for node in gt.nodes() {
        if node.class_id >= pred_class_scores.dim() {
            return Err(Error::ClassOutOfRange {
                kind: "object",
                id: node.class_id,
                len: pred_class_scores.dim(),
            });
        }
    }
    CostMatrix::from_fn(pred_boxes.len(), gt.nodes().len(), |i, j| {
        let gt_node = &gt.nodes()[j];
        let spatial = box_pair_cost(&pred_boxes[i], &gt_node.bbox);
        -weights.w_cls * pred_class_scores.row(i)[gt_node.class_id]
            + weights.w_l1 * spatial.l1
            + weights.w_giou * spatial.giou_cost
    })
}

/// Exact minimum-cost assignment of the smaller side of `cost`.
///
/// Deterministic: among equal-cost alternatives the scan order prefers
/// lower indices, so reruns yield identical pairings. An empty matrix
/// yields an empty matching.
pub fn hungarian(cost: &CostMatrix) -> Matching {
    if cost.rows() == 0 || cost.cols() == 0 {
        return Matching {
            pairs: Vec::new(),
            total_cost: 0.0,
        };
    }

    // Solve with rows ≤ cols; transpose otherwise and swap back below.
    let transposed = cost.rows() > cost.cols();
    let (n, m) = if transposed {
        (cost.cols(), cost.rows())
    } else {
        (cost.rows(), cost.cols())
    };
    let cell = |i: usize, j: usize| {
        if transposed {
            cost.at(j, i)
        } else {
            cost.at(i, j)
        }
    };

    // Potentials formulation over 1-indexed arrays; p[j] is the row
    // matched to column j (0 = unmatched), way[j] backtracks the
    // augmenting path.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        // Flip the augmenting path.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| {
            let (row, col) = (p[j] - 1, j - 1);
            if transposed {
                (col, row)
            } else {
                (row, col)
            }
        })
        .collect();
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(i, j)| cost.at(i, j)).sum();
    Matching { pairs, total_cost }
}
