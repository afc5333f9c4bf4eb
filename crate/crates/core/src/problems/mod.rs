//! Primal-dual oracle contract and the deterministic test problems.
//!
//! Every problem works on the concatenated iterate `z = [x; y]` with `x` the
//! minimized (primal) block and `y` the maximized (dual) block. Oracles are
//! immutable once built and can be shared across threads.

mod dirac;
mod lasso;
mod matrix;
mod quadratic;
mod spec;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DVector, DVectorView};

use crate::error::{Result, SaddleError};

pub use dirac::{sigmoid_loss, sigmoid_loss_prime, sigmoid_loss_second, DiracGan};
pub use lasso::{make_lasso, phi_s, phi_s_prime, phi_s_second, SmoothAbs, SmoothLassoSaddle};
pub use matrix::{
    conditioned_matrix, derive_seed, read_matrix, seeded_rng, standard_normal_vector, write_matrix, MatrixMode,
    MATRIX_MAGIC,
};
pub use quadratic::{make_quadratic, quadratic_solution, QuadraticSaddle};
pub use spec::{Problem, ProblemSpec};

/// Concatenated iterate `z = [x; y]` with an explicit primal/dual split.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    z: DVector<f64>,
    primal_dim: usize,
}

impl PrimalDualPoint {
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        let m = x.len();
        let mut z = DVector::zeros(m + y.len());
        z.rows_mut(0, m).copy_from(&x);
        z.rows_mut(m, y.len()).copy_from(&y);
        Self::from_concat(z, m)
    }

    /// Wraps an already concatenated vector whose first `primal_dim` entries are `x`.
    pub fn from_concat(z: DVector<f64>, primal_dim: usize) -> Result<Self> {
        if primal_dim == 0 || primal_dim >= z.len() {
            return Err(SaddleError::InvalidInput(format!(
                "both blocks must be non-empty (primal {primal_dim}, total {})",
                z.len()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(SaddleError::InvalidInput("point contains non-finite entries".into()));
        }
        Ok(PrimalDualPoint { z, primal_dim })
    }

    pub fn x(&self) -> DVectorView<'_, f64> {
        self.z.rows(0, self.primal_dim)
    }

    pub fn y(&self) -> DVectorView<'_, f64> {
        self.z.rows(self.primal_dim, self.dual_dim())
    }

    pub fn primal_dim(&self) -> usize {
        self.primal_dim
    }

    pub fn dual_dim(&self) -> usize {
        self.z.len() - self.primal_dim
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.z
    }
}

/// Evaluation contract for a smooth saddle function `f(x, y)`.
///
/// `grad` returns the full gradient `[∇ₓf; ∇ᵧf]` and `hvp` the exact product
/// `∇²f(z)·v`. Callers are responsible for passing vectors of length
/// `M + N`; use [`evaluate`] for a checked entry point.
pub trait SaddleOracle: Send + Sync {
    /// `(M, N)`: primal and dual dimensions.
    fn dims(&self) -> (usize, usize);
    fn value(&self, z: &DVector<f64>) -> f64;
    fn grad(&self, z: &DVector<f64>) -> DVector<f64>;
    fn hvp(&self, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64>;

    fn total_dim(&self) -> usize {
        let (m, n) = self.dims();
        m + n
    }
}

impl<O: SaddleOracle + ?Sized> SaddleOracle for &O {
    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }
    fn value(&self, z: &DVector<f64>) -> f64 {
        (**self).value(z)
    }
    fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        (**self).grad(z)
    }
    fn hvp(&self, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        (**self).hvp(z, v)
    }
}

/// Value and gradient at a point, as returned by [`evaluate`].
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub grad: DVector<f64>,
}

/// Checked evaluation: rejects points whose split does not match the oracle.
pub fn evaluate<O: SaddleOracle + ?Sized>(oracle: &O, z: &PrimalDualPoint) -> Result<Evaluation> {
    check_point(oracle, z)?;
    Ok(Evaluation {
        value: oracle.value(z.as_vector()),
        grad: oracle.grad(z.as_vector()),
    })
}

/// Checked Hessian-vector product at a point.
pub fn evaluate_hvp<O: SaddleOracle + ?Sized>(
    oracle: &O,
    z: &PrimalDualPoint,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_point(oracle, z)?;
    if v.len() != oracle.total_dim() {
        return Err(SaddleError::DimensionMismatch {
            expected: oracle.total_dim(),
            got: v.len(),
        });
    }
    Ok(oracle.hvp(z.as_vector(), v))
}

pub(crate) fn check_point<O: SaddleOracle + ?Sized>(oracle: &O, z: &PrimalDualPoint) -> Result<()> {
    let (m, n) = oracle.dims();
    if z.primal_dim() != m {
        return Err(SaddleError::DimensionMismatch {
            expected: m,
            got: z.primal_dim(),
        });
    }
    if z.dual_dim() != n {
        return Err(SaddleError::DimensionMismatch {
            expected: n,
            got: z.dual_dim(),
        });
    }
    Ok(())
}

/// Snapshot of oracle call counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OracleCounts {
    pub value: usize,
    pub grad: usize,
    pub hvp: usize,
}

/// Wraps an oracle and counts every call exactly.
pub struct CountingOracle<O> {
    inner: O,
    value_calls: AtomicUsize,
    grad_calls: AtomicUsize,
    hvp_calls: AtomicUsize,
}

impl<O: SaddleOracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        CountingOracle {
            inner,
            value_calls: AtomicUsize::new(0),
            grad_calls: AtomicUsize::new(0),
            hvp_calls: AtomicUsize::new(0),
        }
    }

    pub fn counts(&self) -> OracleCounts {
        OracleCounts {
            value: self.value_calls.load(Ordering::Relaxed),
            grad: self.grad_calls.load(Ordering::Relaxed),
            hvp: self.hvp_calls.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.value_calls.store(0, Ordering::Relaxed);
        self.grad_calls.store(0, Ordering::Relaxed);
        self.hvp_calls.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: SaddleOracle> SaddleOracle for CountingOracle<O> {
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }
    fn value(&self, z: &DVector<f64>) -> f64 {
        self.value_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(z)
    }
    fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        self.grad_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.grad(z)
    }
    fn hvp(&self, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.hvp_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.hvp(z, v)
    }
}
