//! Proximal regularization of a saddle objective:
//!
//! `f̃(x, y) = f(x, y) + (τ/2)‖x − x̄‖² − (τ/2)‖y − ȳ‖²`
//!
//! The penalty contributes the dampening matrix `T = τ·diag(I, −I)` to the
//! Hessian, which keeps subspace saddle systems solvable when `∇²f`
//! degenerates (bilinear games).

use nalgebra::DVector;

use crate::error::{Result, SaddleError};
use crate::problems::SaddleOracle;

#[derive(Debug, Clone, PartialEq)]
pub struct ProxContext {
    tau: f64,
    center: DVector<f64>,
    primal_dim: usize,
    shrink: f64,
}

impl ProxContext {
    /// `center` is the concatenated prox center `[x̄; ȳ]`.
    pub fn new(tau: f64, center: DVector<f64>, primal_dim: usize, shrink: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(SaddleError::InvalidParameter(format!(
                "tau must be finite and >= 0, got {tau}"
            )));
        }
        if !(shrink > 0.0 && shrink < 1.0) {
            return Err(SaddleError::InvalidParameter(format!(
                "shrink must lie in (0, 1), got {shrink}"
            )));
        }
        if primal_dim == 0 || primal_dim >= center.len() {
            return Err(SaddleError::InvalidInput(format!(
                "prox center of length {} cannot split at {primal_dim}",
                center.len()
            )));
        }
        Ok(ProxContext {
            tau,
            center,
            primal_dim,
            shrink,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn shrink(&self) -> f64 {
        self.shrink
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn primal_dim(&self) -> usize {
        self.primal_dim
    }

    pub(crate) fn set_tau(&mut self, tau: f64) {
        self.tau = tau;
    }

    pub fn prox_value<O: SaddleOracle + ?Sized>(&self, oracle: &O, z: &DVector<f64>) -> f64 {
        let f = oracle.value(z);
        if self.tau == 0.0 {
            return f;
        }
        let m = self.primal_dim;
        let n = z.len() - m;
        let dx = (z.rows(0, m) - self.center.rows(0, m)).norm_squared();
        let dy = (z.rows(m, n) - self.center.rows(m, n)).norm_squared();
        f + 0.5 * self.tau * (dx - dy)
    }

    /// `∇f̃ = ∇f + τ·[x − x̄; −(y − ȳ)]`
    pub fn prox_grad<O: SaddleOracle + ?Sized>(&self, oracle: &O, z: &DVector<f64>) -> DVector<f64> {
        let mut g = oracle.grad(z);
        self.add_penalty_grad(z, &mut g);
        g
    }

    /// `∇²f̃·v = ∇²f·v + τ·[vₓ; −vᵧ]`
    pub fn prox_hvp<O: SaddleOracle + ?Sized>(&self, oracle: &O, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut h = oracle.hvp(z, v);
        self.add_dampening(v, &mut h);
        h
    }

    /// Adds `τ·[x − x̄; −(y − ȳ)]` to `g`.
    pub fn add_penalty_grad(&self, z: &DVector<f64>, g: &mut DVector<f64>) {
        if self.tau == 0.0 {
            return;
        }
        let m = self.primal_dim;
        for i in 0..z.len() {
            let diff = self.tau * (z[i] - self.center[i]);
            if i < m {
                g[i] += diff;
            } else {
                g[i] -= diff;
            }
        }
    }

    /// Adds `T·v = τ·[vₓ; −vᵧ]` to `h`.
    pub fn add_dampening(&self, v: &DVector<f64>, h: &mut DVector<f64>) {
        if self.tau == 0.0 {
            return;
        }
        let m = self.primal_dim;
        for i in 0..v.len() {
            if i < m {
                h[i] += self.tau * v[i];
            } else {
                h[i] -= self.tau * v[i];
            }
        }
    }

    /// `τ ← ν_τ·τ`
    pub fn shrink_tau(&mut self) {
        self.tau *= self.shrink;
    }

    /// Moves the prox centers to `z`.
    pub fn recenter(&mut self, z: &DVector<f64>) {
        self.center.copy_from(z);
    }
}
