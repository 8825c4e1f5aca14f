//! The differentiable-operation checklist behind `sgkit gradcheck`:
//! every analytic gradient in the library compared against central
//! finite differences on freshly sampled random instances.
//!
//! Sampling keeps instances away from the documented non-smooth sets
//! (L1 coordinate ties, GIoU corner ties and degenerate intersections,
//! the VRD elementwise kink, near-zero feature rows for RRD) — the
//! gradients are exact one-sided values there, but a finite-difference
//! comparison is meaningless across a kink.

use rand::Rng;

use sgkit::distillation::{rrd_loss, vrd_loss, EdgeFeatureSet};
use sgkit::gradcheck::{check_gradient, GradCheckConfig};
use sgkit::losses::{
    bce_relation_loss, box_regression_loss, focal_loss, giou_clear_of_nonsmooth, LossConfig,
    GIOU_SMOOTH_MARGIN,
};
use sgkit::scene_model::{seeded_rng, EdgeCombiner, GlobalRelationEmbedding};
use sgkit::types::{BoundingBox, EmbeddingMatrix};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Knobs of one suite run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteSettings {
    pub instances: usize,
    pub step: f64,
    pub tolerance: f64,
    pub floor: f64,
    /// Negative control: corrupt every analytic gradient before the
    /// comparison, so every op must fail.
    pub corrupt: bool,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings {
            instances: 100,
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
            corrupt: false,
        }
    }
}

/// Verdict for one operation.
#[derive(Debug, Clone, PartialEq)]
pub struct OpOutcome {
    pub op: &'static str,
    pub instances: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Names of the checked operations, in report order.
pub const OPS: [&str; 7] = ["focal", "bce", "l1", "giou", "vrd", "rrd", "edge_feature"];

struct OpRun {
    settings: SuiteSettings,
    fd: GradCheckConfig,
    max_rel_error: f64,
    instances: usize,
}

impl OpRun {
    fn new(settings: &SuiteSettings) -> Self {
        OpRun {
            settings: *settings,
            fd: GradCheckConfig {
                step: settings.step,
                tolerance: settings.tolerance,
                floor: settings.floor,
            },
            max_rel_error: 0.0,
            instances: 0,
        }
    }

    /// Check one instance: `f` against `analytic` at `x`.
    fn check(&mut self, f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64]) {
        let mut analytic = analytic.to_vec();
        if self.settings.corrupt {
            analytic[0] = analytic[0] * 1.5 + 0.25;
        }
        let report = check_gradient(f, x, &analytic, &self.fd);
        self.max_rel_error = self.max_rel_error.max(report.max_rel_error);
        self.instances += 1;
    }

    fn outcome(self, op: &'static str) -> OpOutcome {
        OpOutcome {
            op,
            instances: self.instances,
            max_rel_error: self.max_rel_error,
            tolerance: self.settings.tolerance,
            passed: self.max_rel_error <= self.settings.tolerance,
        }
    }
}

fn random_interior_box(rng: &mut impl Rng) -> BoundingBox {
    BoundingBox::new(
        rng.random_range(0.3..0.7),
        rng.random_range(0.3..0.7),
        rng.random_range(0.1..0.4),
        rng.random_range(0.1..0.4),
    )
    .expect("interior box ranges are valid")
}

fn l1_clear_of_ties(pred: &BoundingBox, gt: &BoundingBox) -> bool {
    [
        pred.cx - gt.cx,
        pred.cy - gt.cy,
        pred.w - gt.w,
        pred.h - gt.h,
    ]
    .iter()
    .all(|d| d.abs() >= GIOU_SMOOTH_MARGIN)
}

fn check_focal(rng: &mut impl Rng, run: &mut OpRun) -> sgkit::Result<()> {
    let cfg = LossConfig::default();
    for _ in 0..run.settings.instances {
        let n = rng.random_range(2..=8usize);
        let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let target = rng.random_range(0..n);
        let (_, grad) = focal_loss(&logits, target, &cfg)?;
        let mut f = |x: &[f64]| focal_loss(x, target, &cfg).expect("valid logits").0;
        run.check(&mut f, &logits, &grad);
    }
    Ok(())
}

fn check_bce(rng: &mut impl Rng, run: &mut OpRun) -> sgkit::Result<()> {
    for _ in 0..run.settings.instances {
        let n = rng.random_range(1..=10usize);
        let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let targets: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let (_, grad) = bce_relation_loss(&logits, &targets)?;
        let mut f = |x: &[f64]| bce_relation_loss(x, &targets).expect("valid logits").0;
        run.check(&mut f, &logits, &grad);
    }
    Ok(())
}

/// A scalar objective over a flat parameter vector, boxed so the L1 and
/// GIoU closures can share one finite-difference call site.
type ValueFn = Box<dyn FnMut(&[f64]) -> f64>;

fn check_box_term(rng: &mut impl Rng, run: &mut OpRun, giou: bool) {
    let mut done = 0;
    while done < run.settings.instances {
        let pred = random_interior_box(rng);
        let gt = random_interior_box(rng);
        let smooth = if giou {
            giou_clear_of_nonsmooth(&pred, &gt)
        } else {
            l1_clear_of_ties(&pred, &gt)
        };
        if !smooth {
            continue;
        }
        let r = box_regression_loss(&pred, &gt);
        let (grad, mut f): ([f64; 4], ValueFn) = if giou {
            (
                r.giou_grad,
                Box::new(move |x: &[f64]| {
                    box_regression_loss(
                        &BoundingBox {
                            cx: x[0],
                            cy: x[1],
                            w: x[2],
                            h: x[3],
                        },
                        &gt,
                    )
                    .giou_loss
                }),
            )
        } else {
            (
                r.l1_grad,
                Box::new(move |x: &[f64]| {
                    box_regression_loss(
                        &BoundingBox {
                            cx: x[0],
                            cy: x[1],
                            w: x[2],
                            h: x[3],
                        },
                        &gt,
                    )
                    .l1_loss
                }),
            )
        };
        let x = [pred.cx, pred.cy, pred.w, pred.h];
        run.check(&mut *f, &x, &grad);
        done += 1;
    }
}

/// Random feature matrix with every entry in `(-1, 1)` and every row
/// norm at least 0.3, keeping structure matrices well-conditioned.
fn random_features(rng: &mut impl Rng, rows: usize, dim: usize) -> EmbeddingMatrix {
    let mut out = Vec::with_capacity(rows);
    while out.len() < rows {
        let row: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if row.iter().map(|v| v * v).sum::<f64>().sqrt() >= 0.3 {
            out.push(row);
        }
    }
    EmbeddingMatrix::from_rows(out).expect("rows share a width")
}

fn random_mask(rng: &mut impl Rng, rows: usize) -> Vec<bool> {
    let mut mask: Vec<bool> = (0..rows).map(|_| rng.random_bool(0.5)).collect();
    if !mask.iter().any(|&m| m) {
        mask[rng.random_range(0..rows)] = true;
    }
    mask
}

fn check_distill(rng: &mut impl Rng, run: &mut OpRun, rrd: bool) -> sgkit::Result<()> {
    for _ in 0..run.settings.instances {
        let rows = rng.random_range(2..=5usize);
        let dim = rng.random_range(2..=4usize);
        let teacher_features = random_features(rng, rows, dim);
        let mask = random_mask(rng, rows);
        // Student = teacher + per-entry offset of magnitude ≥ 0.1: clear
        // of the VRD elementwise kink by far more than the probe step,
        // and rows stay well away from zero norm too? No — an offset can
        // cancel a row, so re-sample until every student row keeps a
        // healthy norm.
        let student_features = loop {
            let rows_vec: Vec<Vec<f64>> = (0..rows)
                .map(|r| {
                    teacher_features
                        .row(r)
                        .iter()
                        .map(|v| {
                            let mag = rng.random_range(0.1..0.9);
                            if rng.random_bool(0.5) {
                                v + mag
                            } else {
                                v - mag
                            }
                        })
                        .collect()
                })
                .collect();
            if rows_vec
                .iter()
                .all(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt() >= 0.3)
            {
                break EmbeddingMatrix::from_rows(rows_vec)?;
            }
        };
        let teacher = EdgeFeatureSet::new(teacher_features, mask.clone())?;
        let student = EdgeFeatureSet::new(student_features.clone(), mask.clone())?;
        let (_, grad) = if rrd {
            rrd_loss(&student, &teacher)?
        } else {
            vrd_loss(&student, &teacher)?
        };
        let x: Vec<f64> = student_features.as_slice().to_vec();
        let mask_f = mask.clone();
        let teacher_f = teacher.clone();
        let mut f = move |x: &[f64]| {
            let features =
                EmbeddingMatrix::from_flat(rows, dim, x.to_vec()).expect("flat length matches");
            let s = EdgeFeatureSet::new(features, mask_f.clone()).expect("mask length matches");
            if rrd {
                rrd_loss(&s, &teacher_f).expect("valid sets").0
            } else {
                vrd_loss(&s, &teacher_f).expect("valid sets").0
            }
        };
        run.check(&mut f, &x, grad.as_slice());
    }
    Ok(())
}

fn check_edge_feature(rng: &mut impl Rng, run: &mut OpRun) -> sgkit::Result<()> {
    for _ in 0..run.settings.instances {
        let dim = rng.random_range(2..=4usize);
        let combiner = EdgeCombiner::from_seed(rng.random(), dim)?;
        let e_rln = GlobalRelationEmbedding::from_seed(rng.random(), dim)?;
        let e_i: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e_j: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cotangent: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grads = combiner.edge_feature_vjp(&e_rln, &e_i, &e_j, &cotangent)?;
        let analytic: Vec<f64> = grads
            .d_subject
            .iter()
            .chain(&grads.d_object)
            .copied()
            .collect();
        let x: Vec<f64> = e_i.iter().chain(&e_j).copied().collect();
        let combiner_f = combiner;
        let e_rln_f = e_rln;
        let u = cotangent;
        let mut f = move |x: &[f64]| {
            let out = combiner_f
                .edge_feature(&e_rln_f, &x[..dim], &x[dim..])
                .expect("dims match");
            dot(&u, &out)
        };
        run.check(&mut f, &x, &analytic);
    }
    Ok(())
}

/// Run the whole suite. Instance sampling derives one independent
/// deterministic stream per op from `(seed, op name)`.
pub fn run_suite(seed: u64, settings: &SuiteSettings) -> sgkit::Result<Vec<OpOutcome>> {
    let mut outcomes = Vec::with_capacity(OPS.len());
    for op in OPS {
        let mut rng = seeded_rng(seed, &format!("gradcheck:{op}"));
        let mut run = OpRun::new(settings);
        match op {
            "focal" => check_focal(&mut rng, &mut run)?,
            "bce" => check_bce(&mut rng, &mut run)?,
            "l1" => check_box_term(&mut rng, &mut run, false),
            "giou" => check_box_term(&mut rng, &mut run, true),
            "vrd" => check_distill(&mut rng, &mut run, false)?,
            "rrd" => check_distill(&mut rng, &mut run, true)?,
            "edge_feature" => check_edge_feature(&mut rng, &mut run)?,
            other => unreachable!("unknown op {other}"),
        }
        outcomes.push(run.outcome(op));
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes_every_op() {
        let outcomes = run_suite(5, &SuiteSettings::default()).unwrap();
        assert_eq!(outcomes.len(), OPS.len());
        for o in &outcomes {
            assert!(o.passed, "{} failed: max rel err {}", o.op, o.max_rel_error);
            assert_eq!(o.instances, 100);
        }
    }

    #[test]
    fn corruption_flips_every_verdict() {
        let settings = SuiteSettings {
            corrupt: true,
            instances: 5,
            ..SuiteSettings::default()
        };
        let outcomes = run_suite(5, &settings).unwrap();
        for o in &outcomes {
            assert!(!o.passed, "{} should fail when corrupted", o.op);
        }
    }

    #[test]
    fn suite_is_deterministic_per_seed() {
        let a = run_suite(7, &SuiteSettings::default()).unwrap();
        let b = run_suite(7, &SuiteSettings::default()).unwrap();
        assert_eq!(a, b);
    }
}
