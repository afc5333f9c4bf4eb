//! First-order comparison methods on the descent-ascent field
//! `F(z) = [∇ₓf(z); −∇ᵧf(z)]`: gradient descent-ascent, optimistic GDA and
//! extragradient. All share the trace schema and stopping rule of the SESOP
//! solver.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};
use crate::linesearch::{saddle_backtrack, LineSearchParams, SearchStatus};
use crate::problems::{check_point, PrimalDualPoint, SaddleOracle};
use crate::trace::{distance, Recorder, SolveResult, SolveStatus, TraceRecord, TraceSink};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub max_iters: usize,
    pub eps: f64,
    pub ls: LineSearchParams,
    /// Bypasses the line search with a constant step.
    pub fixed_step: Option<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            max_iters: 1000,
            eps: 1e-8,
            ls: LineSearchParams::default(),
            fixed_step: None,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(SaddleError::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if let Some(eta) = self.fixed_step {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(SaddleError::InvalidParameter(format!(
                    "fixed step must be positive, got {eta}"
                )));
            }
        }
        self.ls.validate()
    }
}

/// `F(z) = [∇ₓf; −∇ᵧf]` from a gradient.
pub fn descent_ascent_field(grad: &DVector<f64>, primal_dim: usize) -> DVector<f64> {
    let mut f = grad.clone();
    f.rows_mut(primal_dim, grad.len() - primal_dim).neg_mut();
    f
}

/// Result of one baseline step.
struct Step {
    z: DVector<f64>,
    g: DVector<f64>,
    eta: f64,
    evals: usize,
}

fn run_loop<O, S>(
    oracle: &O,
    z0: &PrimalDualPoint,
    config: &BaselineConfig,
    z_star: Option<&DVector<f64>>,
    sink: Option<&mut dyn TraceSink>,
    mut step: S,
) -> Result<SolveResult>
where
    O: SaddleOracle + ?Sized,
    S: FnMut(&DVector<f64>, &DVector<f64>) -> Result<Step>,
{
    config.validate()?;
    check_point(oracle, z0)?;
    let mut rec = Recorder::new(sink);
    let start = Instant::now();
    let mut z = z0.as_vector().clone();
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
            tau: 0.0,
            inner_iters: 0,
            ls_evals: 0,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        let status = if !grad_norm.is_finite() || !value.is_finite() {
            Some(SolveStatus::Diverged)
        } else if grad_norm < config.eps {
            Some(SolveStatus::Converged)
        } else if k == config.max_iters {
            Some(SolveStatus::MaxIters)
        } else {
            None
        };
        if let Some(status) = status {
            rec.push(record);
            return Ok(SolveResult {
                z,
                trace: rec.trace,
                status,
            });
        }
        let s = step(&z, &g)?;
        record.eta_outer = s.eta;
        record.ls_evals = s.evals;
        rec.push(record);
        z = s.z;
        g = s.g;
    }
    unreachable!("the loop returns at k == max_iters")
}

fn searched_step<O: SaddleOracle + ?Sized>(
    oracle: &O,
    config: &BaselineConfig,
    z: &DVector<f64>,
    g: &DVector<f64>,
    d: &DVector<f64>,
) -> Result<Step> {
    if let Some(eta) = config.fixed_step {
        let z_next = z + d * eta;
        let g_next = oracle.grad(&z_next);
        return Ok(Step {
            z: z_next,
            g: g_next,
            eta,
            evals: 1,
        });
    }
    match saddle_backtrack(
        |p: &DVector<f64>| oracle.grad(p),
        |p: &DVector<f64>, v: &DVector<f64>| oracle.hvp(p, v),
        z,
        g,
        d,
        &config.ls,
    ) {
        Ok(s) => Ok(Step {
            z: s.point,
            g: s.grad,
            eta: s.eta,
            evals: s.evals,
        }),
        Err(SaddleError::DegenerateDirection(_)) => Ok(Step {
            z: z.clone(),
            g: g.clone(),
            eta: 0.0,
            evals: 0,
        }),
        Err(e) => Err(e),
    }
}

/// Gradient descent-ascent: `z_{k+1} = z_k − η·F(z_k)`.
pub fn gda_run<O: SaddleOracle + ?Sized>(
    oracle: &O,
    z0: &PrimalDualPoint,
    config: &BaselineConfig,
    z_star: Option<&DVector<f64>>,
    sink: Option<&mut dyn TraceSink>,
) -> Result<SolveResult> {
    let m = z0.primal_dim();
    run_loop(oracle, z0, config, z_star, sink, |z, g| {
        let d = -descent_ascent_field(g, m);
        searched_step(oracle, config, z, g, &d)
    })
}

/// Optimistic GDA: `d_k = −(2F(z_k) − F(z_{k−1}))` with `F(z_{−1}) = F(z₀)`.
pub fn ogda_run<O: SaddleOracle + ?Sized>(
    oracle: &O,
    z0: &PrimalDualPoint,
    config: &BaselineConfig,
    z_star: Option<&DVector<f64>>,
    sink: Option<&mut dyn TraceSink>,
) -> Result<SolveResult> {
    let m = z0.primal_dim();
    let mut prev: Option<DVector<f64>> = None;
    run_loop(oracle, z0, config, z_star, sink, |z, g| {
        let f = descent_ascent_field(g, m);
        let f_prev = prev.take().unwrap_or_else(|| f.clone());
        let d = &f_prev - &f * 2.0;
        prev = Some(f);
        searched_step(oracle, config, z, g, &d)
    })
}

/// Extragradient: `z_½ = z − ηF(z)`, `z⁺ = z − ηF(z_½)`.
///
/// `η` is searched on the grid `η₀νⁱ` with the gradient-norm test applied to
/// `z⁺`. When no trial passes, the grid step minimizing `‖∇f(z⁺)‖` is taken.
pub fn egda_run<O: SaddleOracle + ?Sized>(
    oracle: &O,
    z0: &PrimalDualPoint,
    config: &BaselineConfig,
    z_star: Option<&DVector<f64>>,
    sink: Option<&mut dyn TraceSink>,
) -> Result<SolveResult> {
    let m = z0.primal_dim();
    run_loop(oracle, z0, config, z_star, sink, |z, g| {
        let f0 = descent_ascent_field(g, m);
        let trial = |eta: f64| {
            let half = z - &f0 * eta;
            let f_half = descent_ascent_field(&oracle.grad(&half), m);
            let next = z - f_half * eta;
            let g_next = oracle.grad(&next);
            (next, g_next)
        };
        if let Some(eta) = config.fixed_step {
            let (next, g_next) = trial(eta);
            return Ok(Step {
                z: next,
                g: g_next,
                eta,
                evals: 2,
            });
        }
        let ls = &config.ls;
        let base = g.norm_squared();
        let curvature = if ls.c > 0.0 {
            g.dot(&oracle.hvp(z, &(-&f0)))
        } else {
            0.0
        };
        let mut evals = 0;
        let mut best: Option<(f64, Step)> = None;
        let mut status = SearchStatus::Exhausted;
        for i in 0..=ls.max_trials {
            let eta = ls.trial_step(i);
            let (next, g_next) = trial(eta);
            evals += 2;
            let norm2 = g_next.norm_squared();
            if norm2 < base + eta * ls.c * curvature {
                best = Some((
                    norm2,
                    Step {
                        z: next,
                        g: g_next,
                        eta,
                        evals: 0,
                    },
                ));
                status = SearchStatus::Accepted;
                break;
            }
            if best.as_ref().is_none_or(|(b, _)| norm2 < *b) {
                best = Some((
                    norm2,
                    Step {
                        z: next,
                        g: g_next,
                        eta,
                        evals: 0,
                    },
                ));
            }
        }
        let (_, mut s) = best.expect("at least one trial runs");
        if status == SearchStatus::Exhausted {
            log::trace!("extragradient search exhausted, taking best grid step {}", s.eta);
        }
        s.evals = evals;
        Ok(s)
    })
}
