use nalgebra::{DMatrix, DVector, DVectorView};
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{derive_seed, seeded_rng};
use super::SaddleOracle;
use crate::error::{Result, SaddleError};

/// The smooth ℓ₁ surrogate `φₛ(t) = |t| − s·ln(1 + |t|/s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothAbs {
    s: f64,
}

impl SmoothAbs {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(SaddleError::InvalidParameter(format!(
                "smoothing must be positive and finite, got {s}"
            )));
        }
        Ok(SmoothAbs { s })
    }

    pub fn smoothing(&self) -> f64 {
        self.s
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let a = t.abs();
        a - self.s * (a / self.s).ln_1p()
    }

    /// `t / (s + |t|)`
    #[inline]
    pub fn first(&self, t: f64) -> f64 {
        t / (self.s + t.abs())
    }

    /// `s / (s + |t|)²`
    #[inline]
    pub fn second(&self, t: f64) -> f64 {
        let d = self.s + t.abs();
        self.s / (d * d)
    }
}

pub fn phi_s(t: f64, s: f64) -> Result<f64> {
    Ok(SmoothAbs::new(s)?.value(t))
}

pub fn phi_s_prime(t: f64, s: f64) -> Result<f64> {
    Ok(SmoothAbs::new(s)?.first(t))
}

pub fn phi_s_second(t: f64, s: f64) -> Result<f64> {
    Ok(SmoothAbs::new(s)?.second(t))
}

/// Augmented Lagrangian of the smooth Lasso split `x = w`:
///
/// `L(x, w; y) = ½‖Ax − b‖² + λ·Σⱼ φₛ(wⱼ) + yᵀ(x − w) + (ρ/2)‖x − w‖²`
///
/// The primal block is `u = [x; w]` (length `2·n_feat`), the dual block is `y`.
#[derive(Debug, Clone)]
pub struct SmoothLassoSaddle {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    phi: SmoothAbs,
    rho: f64,
}

impl SmoothLassoSaddle {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, lambda: f64, s: f64, rho: f64) -> Result<Self> {
        if a.nrows() != b.len() || a.ncols() == 0 || a.nrows() == 0 {
            return Err(SaddleError::InvalidParameter(format!(
                "data matrix {:?} does not match b of length {}",
                a.shape(),
                b.len()
            )));
        }
        if !(lambda >= 0.0) {
            return Err(SaddleError::InvalidParameter(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        if !(rho > 0.0) {
            return Err(SaddleError::InvalidParameter(format!(
                "rho must be positive, got {rho}"
            )));
        }
        let phi = SmoothAbs::new(s)?;
        Ok(SmoothLassoSaddle { a, b, lambda, phi, rho })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn phi(&self) -> SmoothAbs {
        self.phi
    }
    pub fn n_feat(&self) -> usize {
        self.a.ncols()
    }

    /// Splits `z = [x; w; y]` into its three blocks.
    pub fn split<'a>(&self, z: &'a DVector<f64>) -> (DVectorView<'a, f64>, DVectorView<'a, f64>, DVectorView<'a, f64>) {
        let n = self.n_feat();
        (z.rows(0, n), z.rows(n, n), z.rows(2 * n, n))
    }

    /// Concatenates `(x, w, y)` into the oracle's layout.
    pub fn join(&self, x: &DVector<f64>, w: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n_feat();
        let mut z = DVector::zeros(3 * n);
        z.rows_mut(0, n).copy_from(x);
        z.rows_mut(n, n).copy_from(w);
        z.rows_mut(2 * n, n).copy_from(y);
        z
    }
}

impl SaddleOracle for SmoothLassoSaddle {
    fn dims(&self) -> (usize, usize) {
        (2 * self.n_feat(), self.n_feat())
    }

    fn value(&self, z: &DVector<f64>) -> f64 {
        let (x, w, y) = self.split(z);
        let r = &self.a * x - &self.b;
        let gap = x - w;
        let reg: f64 = w.iter().map(|&t| self.phi.value(t)).sum();
        0.5 * r.norm_squared() + self.lambda * reg + y.dot(&gap) + 0.5 * self.rho * gap.norm_squared()
    }

    fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n_feat();
        let (x, w, y) = self.split(z);
        let r = &self.a * x - &self.b;
        let gap = x - w;
        let mut g = DVector::zeros(3 * n);
        {
            let mut gx = g.rows_mut(0, n);
            gx.gemv_tr(1.0, &self.a, &r, 0.0);
            gx += y;
            gx.axpy(self.rho, &gap, 1.0);
        }
        for j in 0..n {
            g[n + j] = self.lambda * self.phi.first(w[j]) - y[j] - self.rho * gap[j];
            g[2 * n + j] = gap[j];
        }
        g
    }

    fn hvp(&self, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n_feat();
        let (_, w, _) = self.split(z);
        let (vx, vw, vy) = self.split(v);
        let av = &self.a * vx;
        let dv = vx - vw;
        let mut out = DVector::zeros(3 * n);
        {
            let mut ox = out.rows_mut(0, n);
            ox.gemv_tr(1.0, &self.a, &av, 0.0);
            ox.axpy(self.rho, &dv, 1.0);
            ox += vy;
        }
        for j in 0..n {
            out[n + j] = self.lambda * self.phi.second(w[j]) * vw[j] - self.rho * dv[j] - vy[j];
            out[2 * n + j] = dv[j];
        }
        out
    }
}

/// Sparse-regression instance in the style of the classic ADMM Lasso
/// benchmark: Gaussian `A` with unit-norm columns, a 2%-dense ground truth,
/// noise of variance 1e−3, and `λ = 0.1·‖Aᵀb‖∞`.
pub fn make_lasso(m_rows: usize, n_feat: usize, s: f64, rho: f64, seed: u64) -> Result<SmoothLassoSaddle> {
    if m_rows == 0 || n_feat == 0 {
        return Err(SaddleError::InvalidParameter("dimensions must be positive".into()));
    }
    let mut rng = seeded_rng(derive_seed(seed, 10));
    let mut a = DMatrix::from_fn(m_rows, n_feat, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let mut rng = seeded_rng(derive_seed(seed, 11));
    let truth = DVector::from_fn(n_feat, |_, _| {
        if rng.random::<f64>() < 0.02 {
            rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        }
    });
    let mut rng = seeded_rng(derive_seed(seed, 12));
    let noise = DVector::from_fn(m_rows, |_, _| 1e-3f64.sqrt() * rng.sample::<f64, _>(StandardNormal));
    let b = &a * &truth + noise;
    let lambda = 0.1 * (a.transpose() * &b).amax();
    SmoothLassoSaddle::new(a, b, lambda, s, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_at_origin_and_one() {
        for s in [1e-3, 0.5, 2.0] {
            assert_eq!(phi_s(0.0, s).unwrap(), 0.0);
            assert_eq!(phi_s_prime(0.0, s).unwrap(), 0.0);
            assert!((phi_s_second(0.0, s).unwrap() - 1.0 / s).abs() <= 1e-15 / s);
        }
        let v = phi_s(1.0, 1.0).unwrap();
        assert!((v - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((v - 0.306853).abs() < 1e-6);
        assert_eq!(phi_s_prime(1.0, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn phi_rejects_non_positive_smoothing() {
        assert!(phi_s(1.0, 0.0).is_err());
        assert!(phi_s(1.0, -1.0).is_err());
        assert!(SmoothAbs::new(f64::NAN).is_err());
    }

    #[test]
    fn phi_approaches_absolute_value() {
        let v = phi_s(1.0, 1e-6).unwrap();
        assert!((v - 1.0).abs() <= 2e-5);
        let phi = SmoothAbs::new(1e-6).unwrap();
        assert!((phi.value(-3.0) - 3.0).abs() <= 1e-4);
    }

    #[test]
    fn phi_derivatives_match_finite_differences() {
        let phi = SmoothAbs::new(0.3).unwrap();
        for &t in &[-2.0, -0.1, 0.05, 0.7, 4.0] {
            let h = 1e-6;
            let d1 = (phi.value(t + h) - phi.value(t - h)) / (2.0 * h);
            let d2 = (phi.first(t + h) - phi.first(t - h)) / (2.0 * h);
            assert!((d1 - phi.first(t)).abs() < 1e-8, "t={t}");
            assert!((d2 - phi.second(t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn value_reduces_to_least_squares_when_penalties_vanish() {
        let p = make_lasso(6, 4, 1e-3, 1.0, 3).unwrap();
        let p = SmoothLassoSaddle::new(p.a().clone(), p.b().clone(), 0.0, 1e-3, 1.0).unwrap();
        let x = DVector::from_vec(vec![0.3, -1.0, 0.5, 2.0]);
        let z = p.join(&x, &x, &DVector::zeros(4));
        let expected = 0.5 * (p.a() * &x - p.b()).norm_squared();
        assert!((p.value(&z) - expected).abs() < 1e-14);
    }

    #[test]
    fn generated_instance_shape() {
        let p = make_lasso(15, 50, 1e-3, 1.0, 1).unwrap();
        assert_eq!(p.dims(), (100, 50));
        for col in p.a().column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        let expected = 0.1 * (p.a().transpose() * p.b()).amax();
        assert_eq!(p.lambda(), expected);
    }
}
