//! Shared finite-difference gradient checking harness.
//!
//! Every analytic gradient in this crate (losses, distillation, the edge
//! combiner) is validated against central differences through this one
//! utility, so the step size, relative-error definition, and tolerance are
//! identical everywhere:
//!
//! ```text
//! numeric_k = (f(x + h·e_k) − f(x − h·e_k)) / (2h)
//! rel_err_k = |analytic_k − numeric_k| / max(|analytic_k|, |numeric_k|, floor)
//! ```
//!
//! The floor keeps near-zero coordinate pairs from inflating the ratio
//! with pure round-off noise.

/// Parameters of a gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Central-difference step `h`.
    pub step: f64,
    /// Maximum relative error accepted as agreement.
    pub tolerance: f64,
    /// Denominator floor in the relative-error ratio.
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-6,
            tolerance: 1e-4,
            floor: 1e-6,
        }
    }
}

/// Outcome of comparing one analytic gradient against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest per-coordinate relative error.
    pub max_rel_error: f64,
    /// Coordinate attaining it.
    pub worst_index: usize,
    /// Number of parameters checked.
    pub n_params: usize,
}

impl GradCheckReport {
    pub fn passes(&self, cfg: &GradCheckConfig) -> bool {
        self.max_rel_error <= cfg.tolerance
    }
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn numerical_gradient(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let saved = probe[k];
        probe[k] = saved + step;
        let plus = f(&probe);
        probe[k] = saved - step;
        let minus = f(&probe);
        probe[k] = saved;
        grad.push((plus - minus) / (2.0 * step));
    }
    grad
}

/// Compare `analytic` against the central-difference gradient of `f` at
/// `x`. Panics if the gradient length does not match `x`.
pub fn check_gradient(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    analytic: &[f64],
    cfg: &GradCheckConfig,
) -> GradCheckReport {
    assert_eq!(
        analytic.len(),
        x.len(),
        "analytic gradient length must match parameter count"
    );
    let numeric = numerical_gradient(f, x, cfg.step);
    let mut max_rel_error = 0.0f64;
    let mut worst_index = 0;
    for (k, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(cfg.floor);
        if rel > max_rel_error {
            max_rel_error = rel;
            worst_index = k;
        }
    }
    GradCheckReport {
        max_rel_error,
        worst_index,
        n_params: x.len(),
    }
}
