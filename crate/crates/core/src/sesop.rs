//! Sequential subspace optimization for saddle problems.
//!
//! Each outer iteration solves the proximally regularized problem restricted
//! to `z_k + span(P) × span(Q)` with a few damped Newton steps, then moves
//! along the resulting direction with a gradient-norm line search on the raw
//! objective.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};
use crate::inner::{inner_solve, InnerParams};
use crate::linesearch::{saddle_backtrack, LineSearchParams};
use crate::problems::{check_point, PrimalDualPoint, SaddleOracle};
use crate::prox::ProxContext;
use crate::subspace::SubspaceBasis;
use crate::trace::{distance, Recorder, SolveResult, SolveStatus, TraceRecord, TraceSink};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SesopConfig {
    /// Maximum number of directions per side.
    pub d: usize,
    /// Maximum number of outer iterations.
    pub max_iters: usize,
    pub eps: f64,
    pub tau0: f64,
    pub tau_shrink: f64,
    /// `τ` shrinks when `‖∇f̃(z_k)‖` falls below this; `None` means `eps`.
    pub shrink_trigger: Option<f64>,
    pub ls: LineSearchParams,
    pub max_inner: usize,
    /// Consecutive exhausted outer searches tolerated before the subspace
    /// is reset to the gradient.
    pub exhaustion_limit: usize,
}

impl Default for SesopConfig {
    fn default() -> Self {
        SesopConfig {
            d: 3,
            max_iters: 1000,
            eps: 1e-8,
            tau0: 1.0,
            tau_shrink: 0.5,
            shrink_trigger: None,
            ls: LineSearchParams::default(),
            max_inner: 10,
            exhaustion_limit: 5,
        }
    }
}

impl SesopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=10).contains(&self.d) {
            return Err(SaddleError::InvalidParameter(format!(
                "subspace dimension must lie in [1, 10], got {}",
                self.d
            )));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(SaddleError::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.tau0 >= 0.0) || !self.tau0.is_finite() {
            return Err(SaddleError::InvalidParameter(format!(
                "tau0 must be >= 0, got {}",
                self.tau0
            )));
        }
        if !(self.tau_shrink > 0.0 && self.tau_shrink < 1.0) {
            return Err(SaddleError::InvalidParameter(format!(
                "tau_shrink must lie in (0, 1), got {}",
                self.tau_shrink
            )));
        }
        if let Some(t) = self.shrink_trigger {
            if !(t >= 0.0) {
                return Err(SaddleError::InvalidParameter(format!(
                    "shrink_trigger must be >= 0, got {t}"
                )));
            }
        }
        if self.max_inner == 0 {
            return Err(SaddleError::InvalidParameter("max_inner must be positive".into()));
        }
        self.ls.validate()
    }

    fn trigger(&self) -> f64 {
        self.shrink_trigger.unwrap_or(self.eps)
    }
}

/// Extra search directions injected into the subspace before each inner
/// solve (for example ADMM displacements).
pub trait DirectionSource {
    /// Returns a `(primal, dual)` pair, or `None` to skip this iteration.
    fn direction(&mut self, z: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)>;
}

/// Optional extensions of a SESOP run.
#[derive(Default)]
pub struct SesopHooks<'a> {
    pub sink: Option<&'a mut dyn TraceSink>,
    pub booster: Option<&'a mut dyn DirectionSource>,
    /// Inject a boosting direction every `boost_every` iterations (0 or 1
    /// means every iteration).
    pub boost_every: usize,
}

pub fn sesop_run<O: SaddleOracle + ?Sized>(
    oracle: &O,
    z0: &PrimalDualPoint,
    config: &SesopConfig,
    z_star: Option<&DVector<f64>>,
) -> Result<SolveResult> {
    sesop_run_with(oracle, z0, config, z_star, SesopHooks::default())
}

pub fn sesop_run_with<O: SaddleOracle + ?Sized>(
    oracle: &O,
    z0: &PrimalDualPoint,
    config: &SesopConfig,
    z_star: Option<&DVector<f64>>,
    hooks: SesopHooks<'_>,
) -> Result<SolveResult> {
    config.validate()?;
    check_point(oracle, z0)?;
    let (m, n) = oracle.dims();
    if let Some(s) = z_star {
        if s.len() != m + n {
            return Err(SaddleError::DimensionMismatch {
                expected: m + n,
                got: s.len(),
            });
        }
    }
    let SesopHooks {
        sink,
        mut booster,
        boost_every,
    } = hooks;
    let boost_every = boost_every.max(1);

    let mut rec = Recorder::new(sink);
    let mut z = z0.as_vector().clone();
    let mut ctx = ProxContext::new(config.tau0, z.clone(), m, config.tau_shrink)?;
    let mut basis = SubspaceBasis::new(config.d, m, n)?;
    let inner_params = InnerParams {
        eps: config.eps,
        max_inner: config.max_inner,
        ls: config.ls,
    };
    let start = Instant::now();
    let mut exhausted_run = 0usize;
    let mut g = oracle.grad(&z);

    for k in 0..=config.max_iters {
        let grad_norm = g.norm();
        let value = oracle.value(&z);
        let mut record = TraceRecord {
            iter: k,
            grad_norm,
            dist_opt: distance(&z, z_star),
            value,
            eta_outer: 0.0,
            tau: ctx.tau(),
            inner_iters: 0,
            ls_evals: 0,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        if !grad_norm.is_finite() || !value.is_finite() {
            rec.push(record);
            return Ok(finish(z, rec, SolveStatus::Diverged));
        }
        if grad_norm < config.eps {
            rec.push(record);
            return Ok(finish(z, rec, SolveStatus::Converged));
        }
        if k == config.max_iters {
            rec.push(record);
            return Ok(finish(z, rec, SolveStatus::MaxIters));
        }

        let mut g_reg = g.clone();
        ctx.add_penalty_grad(&z, &mut g_reg);
        if g_reg.norm() < config.trigger() {
            ctx.shrink_tau();
            record.tau = ctx.tau();
        }

        let gx = g.rows(0, m).into_owned();
        let gy = g.rows(m, n).into_owned();
        basis.refresh_gradient(&gx, &gy)?;
        if let Some(b) = booster.as_deref_mut() {
            if k % boost_every == 0 {
                if let Some((px, py)) = b.direction(&z) {
                    basis.push_step(&px, &py, z.norm())?;
                }
            }
        }
        basis.sanitize();

        let inner = match inner_solve(oracle, &ctx, &basis.operator(), &z, &inner_params) {
            Err(SaddleError::SingularSubspace { .. }) => {
                log::debug!("iteration {k}: singular subspace system, retrying with the gradient only");
                basis.reset_to_gradient();
                basis.sanitize();
                inner_solve(oracle, &ctx, &basis.operator(), &z, &inner_params)?
            }
            other => other?,
        };
        let op = basis.operator();
        let dir = op.lift(&inner.gamma);
        record.inner_iters = inner.iters;
        record.ls_evals = inner.ls_evals;

        let outer = saddle_backtrack(
            |p: &DVector<f64>| oracle.grad(p),
            |p: &DVector<f64>, v: &DVector<f64>| oracle.hvp(p, v),
            &z,
            &g,
            &dir,
            &config.ls,
        );
        let (z_next, g_next, accepted) = match outer {
            Ok(s) => {
                record.eta_outer = s.eta;
                record.ls_evals += s.evals;
                let ok = s.accepted();
                (s.point, s.grad, ok)
            }
            Err(SaddleError::DegenerateDirection(_)) => (z.clone(), g.clone(), false),
            Err(e) => return Err(e),
        };
        rec.push(record);

        exhausted_run = if accepted { 0 } else { exhausted_run + 1 };
        let step = &z_next - &z;
        basis.push_step(&step.rows(0, m).into_owned(), &step.rows(m, n).into_owned(), z.norm())?;
        ctx.recenter(&z);
        z = z_next;
        g = g_next;

        if exhausted_run > config.exhaustion_limit {
            log::debug!("iteration {k}: {exhausted_run} exhausted searches, resetting subspace");
            basis.reset_to_gradient();
            ctx.set_tau(ctx.tau().max(1.0));
            exhausted_run = 0;
        }
    }
    unreachable!("the loop returns at k == max_iters")
}

fn finish(z: DVector<f64>, rec: Recorder<'_>, status: SolveStatus) -> SolveResult {
    SolveResult {
        z,
        trace: rec.trace,
        status,
    }
}

/// One step of the one-dimensional joint subspace method on the bilinear game
/// `f(x, y) = xᵀCy`, with the closed form subspace coefficients
/// `α = −(QᵀCᵀP)⁻¹QᵀCᵀx` and `β = −(PᵀCQ)⁻¹PᵀCy`, where `P = Cy` and
/// `Q = Cᵀx` are the partial gradients.
pub fn onedim_joint_subspace_step(c: &DMatrix<f64>, z: &DVector<f64>, eta: f64) -> Result<DVector<f64>> {
    let (m, n) = c.shape();
    if z.len() != m + n {
        return Err(SaddleError::DimensionMismatch {
            expected: m + n,
            got: z.len(),
        });
    }
    let x = z.rows(0, m);
    let y = z.rows(m, n);
    let p = c * y;
    let q = c.transpose() * x;
    let coupling = p.dot(&(c * &q));
    if coupling == 0.0 || !coupling.is_finite() {
        return Err(SaddleError::DegenerateDirection(
            "gradients do not couple through C".into(),
        ));
    }
    // QᵀCᵀP and PᵀCQ are the same scalar
    let alpha = -q.dot(&(c.transpose() * x)) / coupling;
    let beta = -p.dot(&(c * y)) / coupling;
    let mut out = z.clone();
    out.rows_mut(0, m).axpy(eta * alpha, &p, 1.0);
    out.rows_mut(m, n).axpy(eta * beta, &q, 1.0);
    Ok(out)
}
