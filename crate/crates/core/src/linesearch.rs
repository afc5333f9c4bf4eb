//! Backtracking on the squared gradient norm.
//!
//! Value-based (Armijo/Wolfe) searches can cycle on saddle problems, so the
//! acceptance test here is
//!
//! `‖g(z + ηd)‖² < ‖g(z)‖² + η·c·⟨g(z), H(z)·d⟩`
//!
//! over the grid `η = η₀·νⁱ`, `i = 0..=max_trials`. With `c = 0` this is plain
//! strict decrease of the gradient norm. The same routine drives the inner
//! search (in subspace coordinates, on the regularized objective) and the
//! outer search (in the full space, on the raw objective).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchParams {
    /// Sufficient-decrease constant in `[0, 1)`.
    pub c: f64,
    /// Step shrink factor in `(0, 1)`.
    pub nu: f64,
    /// First trial step, at most 1.
    pub eta0: f64,
    pub max_trials: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        LineSearchParams {
            c: 0.0,
            nu: 0.5,
            eta0: 1.0,
            max_trials: 30,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.c) {
            return Err(SaddleError::InvalidParameter(format!(
                "c must lie in [0, 1), got {}",
                self.c
            )));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(SaddleError::InvalidParameter(format!(
                "nu must lie in (0, 1), got {}",
                self.nu
            )));
        }
        if !(self.eta0 > 0.0 && self.eta0 <= 1.0) {
            return Err(SaddleError::InvalidParameter(format!(
                "eta0 must lie in (0, 1], got {}",
                self.eta0
            )));
        }
        Ok(())
    }

    /// The `i`-th trial step `η₀·νⁱ`.
    pub fn trial_step(&self, i: usize) -> f64 {
        self.eta0 * self.nu.powi(i as i32)
    }

    /// Smallest step on the grid, returned when every trial fails.
    pub fn smallest_step(&self) -> f64 {
        self.trial_step(self.max_trials)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Accepted,
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub eta: f64,
    pub status: SearchStatus,
    /// Gradient evaluations spent on trials (the baseline gradient is supplied
    /// by the caller and not counted).
    pub evals: usize,
    /// `z + η·d` for the returned step.
    pub point: DVector<f64>,
    /// Gradient at `point`.
    pub grad: DVector<f64>,
}

impl LineSearchOutcome {
    pub fn accepted(&self) -> bool {
        self.status == SearchStatus::Accepted
    }
}

/// Runs the gradient-norm backtracking search from `z` along `d`.
///
/// `g0` must equal `grad(z)`; callers always have it at hand, so it is passed
/// in instead of being recomputed. `hvp` is only called when `c > 0`, once,
/// for the η-independent curvature term `⟨g(z), H(z)·d⟩`.
pub fn saddle_backtrack<G, H>(
    mut grad: G,
    mut hvp: H,
    z: &DVector<f64>,
    g0: &DVector<f64>,
    d: &DVector<f64>,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome>
where
    G: FnMut(&DVector<f64>) -> DVector<f64>,
    H: FnMut(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    let d_norm = d.norm();
    if d_norm == 0.0 || !d_norm.is_finite() {
        return Err(SaddleError::DegenerateDirection(format!(
            "line search direction has norm {d_norm}"
        )));
    }
    let base = g0.norm_squared();
    let curvature = if params.c > 0.0 { g0.dot(&hvp(z, d)) } else { 0.0 };

    let mut evals = 0;
    let mut last = None;
    for i in 0..=params.max_trials {
        let eta = params.trial_step(i);
        let point = z + d * eta;
        let g = grad(&point);
        evals += 1;
        let lhs = g.norm_squared();
        if lhs < base + eta * params.c * curvature {
            return Ok(LineSearchOutcome {
                eta,
                status: SearchStatus::Accepted,
                evals,
                point,
                grad: g,
            });
        }
        last = Some((eta, point, g));
    }
    let (eta, point, grad) = last.expect("at least one trial runs");
    Ok(LineSearchOutcome {
        eta,
        status: SearchStatus::Exhausted,
        evals,
        point,
        grad,
    })
}
