use nalgebra::{DMatrix, DVector};

use super::matrix::{conditioned_matrix, derive_seed, seeded_rng, standard_normal_vector, MatrixMode};
use super::{PrimalDualPoint, SaddleOracle};
use crate::error::{Result, SaddleError};

/// `f(x, y) = ½(xᵀAₓx + yᵀAᵧy) + xᵀCy + bₓᵀx + bᵧᵀy`.
#[derive(Debug, Clone)]
pub struct QuadraticSaddle {
    ax: DMatrix<f64>,
    ay: DMatrix<f64>,
    c: DMatrix<f64>,
    bx: DVector<f64>,
    by: DVector<f64>,
}

impl QuadraticSaddle {
    /// Builds a quadratic saddle from explicit blocks. `Aₓ` and `Aᵧ` must be
    /// symmetric; definiteness is not enforced so degenerate games can be
    /// expressed.
    pub fn new(
        ax: DMatrix<f64>,
        ay: DMatrix<f64>,
        c: DMatrix<f64>,
        bx: DVector<f64>,
        by: DVector<f64>,
    ) -> Result<Self> {
        let m = bx.len();
        let n = by.len();
        if m == 0 || n == 0 {
            return Err(SaddleError::InvalidParameter("empty block".into()));
        }
        if ax.shape() != (m, m) || ay.shape() != (n, n) || c.shape() != (m, n) {
            return Err(SaddleError::InvalidParameter(format!(
                "block shapes Ax {:?}, Ay {:?}, C {:?} do not match M={m}, N={n}",
                ax.shape(),
                ay.shape(),
                c.shape()
            )));
        }
        for (name, a) in [("Ax", &ax), ("Ay", &ay)] {
            let asym = (a - a.transpose()).amax();
            if asym > 1e-12 * a.amax().max(1.0) {
                return Err(SaddleError::InvalidParameter(format!(
                    "{name} is not symmetric (max asymmetry {asym:e})"
                )));
            }
        }
        Ok(QuadraticSaddle { ax, ay, c, bx, by })
    }

    /// `f(x, y) = xᵀy` on `Rⁿ × Rⁿ`.
    pub fn bilinear_identity(n: usize) -> Self {
        QuadraticSaddle {
            ax: DMatrix::zeros(n, n),
            ay: DMatrix::zeros(n, n),
            c: DMatrix::identity(n, n),
            bx: DVector::zeros(n),
            by: DVector::zeros(n),
        }
    }

    pub fn ax(&self) -> &DMatrix<f64> {
        &self.ax
    }
    pub fn ay(&self) -> &DMatrix<f64> {
        &self.ay
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn bx(&self) -> &DVector<f64> {
        &self.bx
    }
    pub fn by(&self) -> &DVector<f64> {
        &self.by
    }

    /// The stacked matrix `[[Aₓ, C], [Cᵀ, Aᵧ]]`, i.e. the (constant) Hessian.
    pub fn kkt_matrix(&self) -> DMatrix<f64> {
        let (m, n) = (self.bx.len(), self.by.len());
        let mut k = DMatrix::zeros(m + n, m + n);
        k.view_mut((0, 0), (m, m)).copy_from(&self.ax);
        k.view_mut((0, m), (m, n)).copy_from(&self.c);
        k.view_mut((m, 0), (n, m)).copy_from(&self.c.transpose());
        k.view_mut((m, m), (n, n)).copy_from(&self.ay);
        k
    }

    fn split<'a>(&self, z: &'a DVector<f64>) -> (nalgebra::DVectorView<'a, f64>, nalgebra::DVectorView<'a, f64>) {
        let m = self.bx.len();
        (z.rows(0, m), z.rows(m, self.by.len()))
    }

    /// Applies the block Hessian to `v` (shared by `grad` and `hvp`).
    fn apply_blocks(&self, v: &DVector<f64>) -> DVector<f64> {
        let (m, n) = (self.bx.len(), self.by.len());
        let (vx, vy) = self.split(v);
        let mut out = DVector::zeros(m + n);
        {
            let mut ox = out.rows_mut(0, m);
            ox.gemv(1.0, &self.ax, &vx, 0.0);
            ox.gemv(1.0, &self.c, &vy, 1.0);
        }
        {
            let mut oy = out.rows_mut(m, n);
            oy.gemv(1.0, &self.ay, &vy, 0.0);
            oy.gemv_tr(1.0, &self.c, &vx, 1.0);
        }
        out
    }
}

impl SaddleOracle for QuadraticSaddle {
    fn dims(&self) -> (usize, usize) {
        (self.bx.len(), self.by.len())
    }

    fn value(&self, z: &DVector<f64>) -> f64 {
        let (x, y) = self.split(z);
        let ax_x = &self.ax * x;
        let ay_y = &self.ay * y;
        let c_y = &self.c * y;
        0.5 * (x.dot(&ax_x) + y.dot(&ay_y)) + x.dot(&c_y) + self.bx.dot(&x) + self.by.dot(&y)
    }

    fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        let m = self.bx.len();
        let mut g = self.apply_blocks(z);
        g.rows_mut(0, m).axpy(1.0, &self.bx, 1.0);
        g.rows_mut(m, self.by.len()).axpy(1.0, &self.by, 1.0);
        g
    }

    fn hvp(&self, _z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.apply_blocks(v)
    }
}

/// Generates the benchmark quadratic.
///
/// With `bilinear = false`, `Aₓ ≻ 0` and `Aᵧ ≺ 0` get condition numbers
/// `kappa_x`/`kappa_y`, `C` is general with `kappa_c` (zero when `None`, the
/// separable setting) and `b` is standard normal. With `bilinear = true`,
/// `Aₓ = Aᵧ = 0`, `b = 0`, and `C` is square with `kappa_c` (default 1).
pub fn make_quadratic(
    m: usize,
    n: usize,
    kappa_x: f64,
    kappa_y: f64,
    kappa_c: Option<f64>,
    bilinear: bool,
    seed: u64,
) -> Result<QuadraticSaddle> {
    if m == 0 || n == 0 {
        return Err(SaddleError::InvalidParameter("dimensions must be positive".into()));
    }
    if bilinear {
        if m != n {
            return Err(SaddleError::InvalidParameter(format!(
                "bilinear games need M = N for a unique saddle, got {m} and {n}"
            )));
        }
        let c = conditioned_matrix(m, n, kappa_c.unwrap_or(1.0), derive_seed(seed, 3), MatrixMode::General)?;
        return QuadraticSaddle::new(
            DMatrix::zeros(m, m),
            DMatrix::zeros(n, n),
            c,
            DVector::zeros(m),
            DVector::zeros(n),
        );
    }
    let ax = conditioned_matrix(m, m, kappa_x, derive_seed(seed, 1), MatrixMode::SymPosDef)?;
    let ay = conditioned_matrix(n, n, kappa_y, derive_seed(seed, 2), MatrixMode::SymNegDef)?;
    let c = match kappa_c {
        Some(k) => conditioned_matrix(m, n, k, derive_seed(seed, 3), MatrixMode::General)?,
        None => DMatrix::zeros(m, n),
    };
    let mut rng = seeded_rng(derive_seed(seed, 4));
    let bx = standard_normal_vector(&mut rng, m);
    let by = standard_normal_vector(&mut rng, n);
    QuadraticSaddle::new(ax, ay, c, bx, by)
}

/// The unique stationary point, solving `[[Aₓ, C], [Cᵀ, Aᵧ]]·z* = −[bₓ; bᵧ]`.
pub fn quadratic_solution(p: &QuadraticSaddle) -> Result<PrimalDualPoint> {
    let (m, n) = p.dims();
    let k = p.kkt_matrix();
    let scale = k.amax();
    let lu = k.full_piv_lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if scale == 0.0 || min_pivot <= 1e-13 * scale * (m + n) as f64 {
        return Err(SaddleError::NoUniqueSolution(format!(
            "stacked KKT matrix is singular (min pivot {min_pivot:e}, scale {scale:e})"
        )));
    }
    let mut rhs = DVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(&(-p.bx()));
    rhs.rows_mut(m, n).copy_from(&(-p.by()));
    let z = lu
        .solve(&rhs)
        .ok_or_else(|| SaddleError::NoUniqueSolution("LU solve failed".into()))?;
    PrimalDualPoint::from_concat(z, m)
}
