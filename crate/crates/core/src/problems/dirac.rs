use nalgebra::DVector;

use super::matrix::{seeded_rng, standard_normal_vector};
use super::{PrimalDualPoint, SaddleOracle};
use crate::error::{Result, SaddleError};

/// Sigmoid cross-entropy `φ(t) = −ln(1 + e^{−t})`, evaluated without overflow.
pub fn sigmoid_loss(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

/// `φ′(t) = 1 / (1 + eᵗ)`
pub fn sigmoid_loss_prime(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `φ″(t) = −φ′(t)·(1 − φ′(t))`
pub fn sigmoid_loss_second(t: f64) -> f64 {
    let p = sigmoid_loss_prime(t);
    -p * (1.0 - p)
}

/// High-dimensional Dirac GAN: `f(x, y) = φ(−xᵀy) + φ(yᵀc)` with generator
/// `x`, discriminator `y`, and data point `c`. The unique equilibrium is `(c, 0)`.
#[derive(Debug, Clone)]
pub struct DiracGan {
    c_data: DVector<f64>,
}

impl DiracGan {
    pub fn new(c_data: DVector<f64>) -> Result<Self> {
        if c_data.is_empty() || c_data.iter().any(|v| !v.is_finite()) {
            return Err(SaddleError::InvalidParameter(
                "Dirac data point must be a non-empty finite vector".into(),
            ));
        }
        Ok(DiracGan { c_data })
    }

    /// Samples the data point from a standard normal.
    pub fn sample(n: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        Self::new(standard_normal_vector(&mut rng, n))
    }

    pub fn c_data(&self) -> &DVector<f64> {
        &self.c_data
    }

    pub fn equilibrium(&self) -> PrimalDualPoint {
        PrimalDualPoint::new(self.c_data.clone(), DVector::zeros(self.c_data.len())).expect("finite by construction")
    }
}

impl SaddleOracle for DiracGan {
    fn dims(&self) -> (usize, usize) {
        (self.c_data.len(), self.c_data.len())
    }

    fn value(&self, z: &DVector<f64>) -> f64 {
        let n = self.c_data.len();
        let (x, y) = (z.rows(0, n), z.rows(n, n));
        sigmoid_loss(-x.dot(&y)) + sigmoid_loss(y.dot(&self.c_data))
    }

    fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.c_data.len();
        let (x, y) = (z.rows(0, n), z.rows(n, n));
        let pa = sigmoid_loss_prime(-x.dot(&y));
        let pb = sigmoid_loss_prime(y.dot(&self.c_data));
        let mut g = DVector::zeros(2 * n);
        g.rows_mut(0, n).axpy(-pa, &y, 0.0);
        {
            let mut gy = g.rows_mut(n, n);
            gy.axpy(-pa, &x, 0.0);
            gy.axpy(pb, &self.c_data, 1.0);
        }
        g
    }

    fn hvp(&self, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.c_data.len();
        let (x, y) = (z.rows(0, n), z.rows(n, n));
        let (vx, vy) = (v.rows(0, n), v.rows(n, n));
        let a = -x.dot(&y);
        let b = y.dot(&self.c_data);
        let p1 = sigmoid_loss_prime(a);
        let p2 = sigmoid_loss_second(a);
        let q2 = sigmoid_loss_second(b);
        // ∂a/∂x = −y, ∂a/∂y = −x; the mixed term below is p2·(yᵀvx + xᵀvy)
        let mixed = p2 * (y.dot(&vx) + x.dot(&vy));
        let along_c = q2 * self.c_data.dot(&vy);
        let mut out = DVector::zeros(2 * n);
        {
            let mut ox = out.rows_mut(0, n);
            ox.axpy(mixed, &y, 0.0);
            ox.axpy(-p1, &vy, 1.0);
        }
        {
            let mut oy = out.rows_mut(n, n);
            oy.axpy(mixed, &x, 0.0);
            oy.axpy(-p1, &vx, 1.0);
            oy.axpy(along_c, &self.c_data, 1.0);
        }
        out
    }
}
