//! ADMM for the smooth Lasso split `x = w`, as a standalone solver and as a
//! source of extra SESOP directions.

use std::time::Instant;

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Result, SaddleError};
use crate::problems::{SaddleOracle, SmoothLassoSaddle};
use crate::sesop::DirectionSource;
use crate::trace::{Recorder, SolveResult, SolveStatus, TraceRecord, TraceSink};

const W_MAX_ITERS: usize = 60;

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: DVector<f64>,
    pub w: DVector<f64>,
    pub y: DVector<f64>,
    rho: f64,
    factor: Cholesky<f64, Dyn>,
}

fn factorize(problem: &SmoothLassoSaddle, rho: f64) -> Result<Cholesky<f64, Dyn>> {
    let a = problem.a();
    let mut gram = a.tr_mul(a);
    for i in 0..gram.nrows() {
        gram[(i, i)] += rho;
    }
    Cholesky::new(gram).ok_or_else(|| SaddleError::InvalidParameter(format!("AᵀA + {rho}·I is not positive definite")))
}

impl AdmmState {
    pub fn new(problem: &SmoothLassoSaddle, x: DVector<f64>, w: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        let n = problem.n_feat();
        for v in [&x, &w, &y] {
            if v.len() != n {
                return Err(SaddleError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let rho = problem.rho();
        Ok(AdmmState {
            x,
            w,
            y,
            rho,
            factor: factorize(problem, rho)?,
        })
    }

    pub fn zeros(problem: &SmoothLassoSaddle) -> Result<Self> {
        let n = problem.n_feat();
        Self::new(problem, DVector::zeros(n), DVector::zeros(n), DVector::zeros(n))
    }

    /// Builds a state from the oracle layout `[x; w; y]`.
    pub fn from_point(problem: &SmoothLassoSaddle, z: &DVector<f64>) -> Result<Self> {
        if z.len() != 3 * problem.n_feat() {
            return Err(SaddleError::DimensionMismatch {
                expected: 3 * problem.n_feat(),
                got: z.len(),
            });
        }
        let (x, w, y) = problem.split(z);
        Self::new(problem, x.into_owned(), w.into_owned(), y.into_owned())
    }

    pub fn to_point(&self) -> DVector<f64> {
        let n = self.x.len();
        let mut z = DVector::zeros(3 * n);
        z.rows_mut(0, n).copy_from(&self.x);
        z.rows_mut(n, n).copy_from(&self.w);
        z.rows_mut(2 * n, n).copy_from(&self.y);
        z
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Changes the penalty and refactors `AᵀA + ρI`.
    pub fn set_rho(&mut self, problem: &SmoothLassoSaddle, rho: f64) -> Result<()> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(SaddleError::InvalidParameter(format!(
                "rho must be positive, got {rho}"
            )));
        }
        self.factor = factorize(problem, rho)?;
        self.rho = rho;
        Ok(())
    }

    /// Borrows the cached factorization and re-uses it for a new iterate.
    fn with_point(&self, z: &DVector<f64>) -> Self {
        let n = self.x.len();
        AdmmState {
            x: z.rows(0, n).into_owned(),
            w: z.rows(n, n).into_owned(),
            y: z.rows(2 * n, n).into_owned(),
            rho: self.rho,
            factor: self.factor.clone(),
        }
    }
}

/// `x ← (AᵀA + ρI)⁻¹(Aᵀb − y + ρw)`
pub fn admm_x_update(state: &mut AdmmState, problem: &SmoothLassoSaddle) {
    let mut rhs = problem.a().tr_mul(problem.b());
    rhs -= &state.y;
    rhs.axpy(state.rho, &state.w, 1.0);
    state.x = state.factor.solve(&rhs);
}

/// Solves `λ·w/(s + |w|) + ρw = t` for `w`, returning the root and the
/// absolute residual.
///
/// The left side is odd and strictly increasing, so the root has the sign of
/// `t` and lies in `[min(0, t/ρ), max(0, t/ρ)]`. Newton starts from the
/// soft-threshold value and falls back to bisection when it leaves the
/// bracket.
pub fn shrinkage_root(t: f64, lambda: f64, s: f64, rho: f64) -> (f64, f64) {
    let h = |w: f64| lambda * w / (s + w.abs()) + rho * w - t;
    if t == 0.0 {
        return (0.0, 0.0);
    }
    let (mut lo, mut hi) = ((t / rho).min(0.0), (t / rho).max(0.0));
    let mut w = t.signum() * (t.abs() - lambda).max(0.0) / rho;
    let tol = 1e-14 * t.abs().max(1.0);
    for _ in 0..W_MAX_ITERS {
        let r = h(w);
        if r.abs() <= tol {
            break;
        }
        if r > 0.0 {
            hi = hi.min(w);
        } else {
            lo = lo.max(w);
        }
        let slope = lambda * s / (s + w.abs()).powi(2) + rho;
        let next = w - r / slope;
        w = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    (w, h(w).abs())
}

/// Per-coordinate `w` update; returns the largest root residual.
pub fn admm_w_update(state: &mut AdmmState, lambda: f64, s: f64) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..state.w.len() {
        let t = state.rho * state.x[j] + state.y[j];
        let (w, res) = shrinkage_root(t, lambda, s, state.rho);
        state.w[j] = w;
        worst = worst.max(res);
    }
    worst
}

/// One full sweep: `x`, then `w`, then `y ← y + ρ(x − w)`. Returns the
/// largest `w` root residual.
pub fn admm_sweep(state: &mut AdmmState, problem: &SmoothLassoSaddle) -> f64 {
    admm_x_update(state, problem);
    let res = admm_w_update(state, problem.lambda(), problem.phi().smoothing());
    let gap = &state.x - &state.w;
    state.y.axpy(state.rho, &gap, 1.0);
    res
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmRecord {
    /// Norm of the augmented-Lagrangian gradient at `([x; w], y)`.
    pub grad_norm: f64,
    /// `‖x − w‖`
    pub primal_residual: f64,
    /// Largest `w`-update root residual of the sweep that produced this state.
    pub w_residual: f64,
}

/// Runs `iters` sweeps. The trace holds the initial state followed by one
/// record per sweep.
pub fn admm_run(problem: &SmoothLassoSaddle, state: &mut AdmmState, iters: usize) -> Vec<AdmmRecord> {
    let record = |st: &AdmmState, w_residual: f64| AdmmRecord {
        grad_norm: problem.grad(&st.to_point()).norm(),
        primal_residual: (&st.x - &st.w).norm(),
        w_residual,
    };
    let mut trace = Vec::with_capacity(iters + 1);
    trace.push(record(state, 0.0));
    for _ in 0..iters {
        let res = admm_sweep(state, problem);
        trace.push(record(state, res));
    }
    trace
}

/// Runs sweeps until the augmented-Lagrangian gradient norm drops below
/// `eps` or `max_iters` sweeps are done, recording the shared trace schema
/// (one record per state, `eta_outer = 1` for every sweep taken).
pub fn admm_solve<O: SaddleOracle + ?Sized>(
    oracle: &O,
    problem: &SmoothLassoSaddle,
    state: &mut AdmmState,
    max_iters: usize,
    eps: f64,
    sink: Option<&mut dyn TraceSink>,
) -> (SolveResult, f64) {
    let mut rec = Recorder::new(sink);
    let start = Instant::now();
    let mut worst_residual = 0.0f64;
    for k in 0..=max_iters {
        let z = state.to_point();
        let grad_norm = oracle.grad(&z).norm();
        let value = oracle.value(&z);
        let status = if !grad_norm.is_finite() || !value.is_finite() {
            Some(SolveStatus::Diverged)
        } else if grad_norm < eps {
            Some(SolveStatus::Converged)
        } else if k == max_iters {
            Some(SolveStatus::MaxIters)
        } else {
            None
        };
        let mut record = TraceRecord {
            iter: k,
            grad_norm,
            dist_opt: None,
            value,
            eta_outer: 0.0,
            tau: 0.0,
            inner_iters: 0,
            ls_evals: 0,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        if let Some(status) = status {
            rec.push(record);
            let result = SolveResult {
                z,
                trace: rec.trace,
                status,
            };
            return (result, worst_residual);
        }
        worst_residual = worst_residual.max(admm_sweep(state, problem));
        record.eta_outer = 1.0;
        rec.push(record);
    }
    unreachable!("the loop returns at k == max_iters")
}

/// The displacement `([Δx; Δw], Δy)` between two consecutive states, or
/// `None` when they coincide.
pub fn admm_direction(before: &AdmmState, after: &AdmmState) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = before.x.len();
    let mut primal = DVector::zeros(2 * n);
    primal.rows_mut(0, n).copy_from(&(&after.x - &before.x));
    primal.rows_mut(n, n).copy_from(&(&after.w - &before.w));
    let dual = &after.y - &before.y;
    if primal.norm_squared() + dual.norm_squared() == 0.0 {
        None
    } else {
        Some((primal, dual))
    }
}

/// Supplies one ADMM sweep displacement from the current SESOP iterate.
pub struct AdmmBooster<'a> {
    problem: &'a SmoothLassoSaddle,
    template: AdmmState,
    /// Largest `w` root residual seen so far.
    pub max_w_residual: f64,
}

impl<'a> AdmmBooster<'a> {
    pub fn new(problem: &'a SmoothLassoSaddle) -> Result<Self> {
        Ok(AdmmBooster {
            problem,
            template: AdmmState::zeros(problem)?,
            max_w_residual: 0.0,
        })
    }
}

impl DirectionSource for AdmmBooster<'_> {
    fn direction(&mut self, z: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let before = self.template.with_point(z);
        let mut after = before.clone();
        let res = admm_sweep(&mut after, self.problem);
        self.max_w_residual = self.max_w_residual.max(res);
        admm_direction(&before, &after)
    }
}
