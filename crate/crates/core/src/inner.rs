//! Damped Newton iterations on the proximal subspace saddle problem.
//!
//! In subspace coordinates `γ = [α; β]` the regularized objective is
//! `γ ↦ f̃(z + Rγ)` with gradient `Rᵀ∇f̃(z + Rγ)` and Hessian
//! `Rᵀ(∇²f + T)R`. The Hessian is assembled column by column from `m + n`
//! Hessian-vector products; the full-space Hessian is never formed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};
use crate::linesearch::{saddle_backtrack, LineSearchParams};
use crate::problems::SaddleOracle;
use crate::prox::ProxContext;
use crate::subspace::BlockOperator;

/// Relative pivot size below which the subspace system counts as singular.
const PIVOT_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSystem {
    /// `Rᵀ(∇²f(z + Rγ) + T)R`, symmetrized.
    pub h: DMatrix<f64>,
    /// `Rᵀ∇f̃(z + Rγ)`
    pub g: DVector<f64>,
    pub gamma: DVector<f64>,
    /// Number of primal coordinates `m` (the leading block of `γ`).
    pub primal_cols: usize,
}

/// `Rᵀ∇f̃(z + Rγ)`
pub fn subspace_gradient<O: SaddleOracle + ?Sized>(
    oracle: &O,
    ctx: &ProxContext,
    op: &BlockOperator,
    z: &DVector<f64>,
    gamma: &DVector<f64>,
) -> DVector<f64> {
    let point = z + op.lift(gamma);
    op.project(&ctx.prox_grad(oracle, &point))
}

fn assemble_hessian<O: SaddleOracle + ?Sized>(
    oracle: &O,
    ctx: &ProxContext,
    op: &BlockOperator,
    point: &DVector<f64>,
) -> DMatrix<f64> {
    let k = op.dim();
    let mut h = DMatrix::zeros(k, k);
    for j in 0..k {
        let hv = oracle.hvp(point, &op.column(j));
        h.set_column(j, &op.project(&hv));
    }
    if ctx.tau() > 0.0 {
        h += op.dampening_gram() * ctx.tau();
    }
    (&h + h.transpose()) * 0.5
}

/// Builds the subspace Newton system at `γ` with exactly `m + n` Hessian-vector
/// products and one regularized gradient.
pub fn build_system<O: SaddleOracle + ?Sized>(
    oracle: &O,
    ctx: &ProxContext,
    op: &BlockOperator,
    z: &DVector<f64>,
    gamma: &DVector<f64>,
) -> SubspaceSystem {
    let point = z + op.lift(gamma);
    let h = assemble_hessian(oracle, ctx, op, &point);
    let g = op.project(&ctx.prox_grad(oracle, &point));
    SubspaceSystem {
        h,
        g,
        gamma: gamma.clone(),
        primal_cols: op.subspace_dims().0,
    }
}

fn solve_if_regular(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.norm();
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let lu = h.clone().full_piv_lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min_pivot < PIVOT_TOL * scale {
        return None;
    }
    lu.solve(rhs).filter(|x| x.iter().all(|v| v.is_finite()))
}

/// Newton direction `γ̄ = −H⁻¹g`.
///
/// A near-singular `H` is bumped by `μ·diag(I, −I)` (primal block up, dual
/// block down, preserving the saddle inertia), doubling `μ` from
/// `1e−10·(trace scale)` until the system factors.
pub fn newton_step(sys: &SubspaceSystem) -> Result<DVector<f64>> {
    let rhs = -&sys.g;
    if let Some(step) = solve_if_regular(&sys.h, &rhs) {
        return Ok(step);
    }
    let k = sys.h.nrows();
    let mut scale = sys.h.diagonal().iter().map(|v| v.abs()).sum::<f64>() / k as f64;
    if scale == 0.0 {
        scale = sys.h.norm() / k as f64;
    }
    if !(scale > 0.0) || !scale.is_finite() {
        scale = 1.0;
    }
    let mut mu = 1e-10 * scale;
    for doubling in 0..MAX_DOUBLINGS {
        let mut bumped = sys.h.clone();
        for i in 0..k {
            bumped[(i, i)] += if i < sys.primal_cols { mu } else { -mu };
        }
        if let Some(step) = solve_if_regular(&bumped, &rhs) {
            log::debug!("subspace system regularized with mu = {mu:e} after {doubling} doublings");
            return Ok(step);
        }
        mu *= 2.0;
    }
    Err(SaddleError::SingularSubspace {
        doublings: MAX_DOUBLINGS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerParams {
    pub eps: f64,
    pub max_inner: usize,
    pub ls: LineSearchParams,
}

impl Default for InnerParams {
    fn default() -> Self {
        InnerParams {
            eps: 1e-8,
            max_inner: 10,
            ls: LineSearchParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub gamma: DVector<f64>,
    pub iters: usize,
    /// `‖Rᵀ∇f̃(z + Rγ)‖` at the returned `γ`.
    pub grad_norm: f64,
    /// Gradient evaluations spent in inner line searches.
    pub ls_evals: usize,
    /// Step sizes accepted by the inner line search, one per iteration.
    pub etas: Vec<f64>,
    /// Subspace gradient norm before each iteration and at exit.
    pub grad_history: Vec<f64>,
}

/// Runs damped Newton from `γ = 0` until `‖∇_γf̃‖ ≤ ε`, `max_inner`
/// iterations, or two consecutive exhausted line searches.
pub fn inner_solve<O: SaddleOracle + ?Sized>(
    oracle: &O,
    ctx: &ProxContext,
    op: &BlockOperator,
    z: &DVector<f64>,
    params: &InnerParams,
) -> Result<InnerOutcome> {
    if op.dim() == 0 {
        return Err(SaddleError::DegenerateDirection("empty subspace".into()));
    }
    let mut gamma = DVector::zeros(op.dim());
    let mut g = subspace_gradient(oracle, ctx, op, z, &gamma);
    let mut out = InnerOutcome {
        gamma: gamma.clone(),
        iters: 0,
        grad_norm: g.norm(),
        ls_evals: 0,
        etas: Vec::new(),
        grad_history: vec![g.norm()],
    };
    let mut exhausted_run = 0;
    while g.norm() > params.eps && out.iters < params.max_inner {
        let point = z + op.lift(&gamma);
        let sys = SubspaceSystem {
            h: assemble_hessian(oracle, ctx, op, &point),
            g: g.clone(),
            gamma: gamma.clone(),
            primal_cols: op.subspace_dims().0,
        };
        let step = newton_step(&sys)?;
        let search = saddle_backtrack(
            |gm: &DVector<f64>| subspace_gradient(oracle, ctx, op, z, gm),
            |gm: &DVector<f64>, v: &DVector<f64>| {
                let p = z + op.lift(gm);
                op.project(&ctx.prox_hvp(oracle, &p, &op.lift(v)))
            },
            &gamma,
            &g,
            &step,
            &params.ls,
        );
        let search = match search {
            Ok(s) => s,
            // a vanishing Newton step means the subspace problem is solved to round-off
            Err(SaddleError::DegenerateDirection(_)) => break,
            Err(e) => return Err(e),
        };
        out.ls_evals += search.evals;
        out.iters += 1;
        out.etas.push(search.eta);
        let accepted = search.accepted();
        gamma = search.point;
        g = search.grad;
        out.grad_history.push(g.norm());
        if accepted {
            exhausted_run = 0;
        } else {
            exhausted_run += 1;
            if exhausted_run >= 2 {
                break;
            }
        }
    }
    out.grad_norm = g.norm();
    out.gamma = gamma;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic, seeded_rng, standard_normal_vector, QuadraticSaddle};
    use crate::subspace::SubspaceBasis;

    fn scalar_op() -> BlockOperator {
        BlockOperator::new(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0))
    }

    #[test]
    fn identity_embedding_recovers_full_hessian() {
        let q = make_quadratic(4, 3, 10.0, 5.0, Some(3.0), false, 1).unwrap();
        let op = BlockOperator::new(DMatrix::identity(4, 4), DMatrix::identity(3, 3));
        let ctx = ProxContext::new(0.0, DVector::zeros(7), 4, 0.5).unwrap();
        let sys = build_system(&q, &ctx, &op, &DVector::zeros(7), &DVector::zeros(7));
        assert!((&sys.h - q.kkt_matrix()).amax() < 1e-12);
    }

    #[test]
    fn bilinear_scalar_systems() {
        let q = QuadraticSaddle::bilinear_identity(1);
        let op = scalar_op();
        let z = DVector::from_vec(vec![1.0, 1.0]);
        let ctx = ProxContext::new(0.0, z.clone(), 1, 0.5).unwrap();
        let sys = build_system(&q, &ctx, &op, &z, &DVector::zeros(2));
        assert_eq!(sys.h, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let ctx = ProxContext::new(1.0, z.clone(), 1, 0.5).unwrap();
        let sys = build_system(&q, &ctx, &op, &z, &DVector::zeros(2));
        assert_eq!(sys.h, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]));
        assert!((sys.h.determinant() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_system_step() {
        let mut g = DVector::zeros(3);
        g[0] = 1.0;
        let sys = SubspaceSystem {
            h: DMatrix::identity(3, 3),
            g,
            gamma: DVector::zeros(3),
            primal_cols: 2,
        };
        assert_eq!(newton_step(&sys).unwrap().as_slice(), &[-1.0, 0.0, 0.0]);
    }

    #[test]
    fn singular_system_takes_regularized_path() {
        // C chosen so that QᵀCᵀP = 0 for P = e₁, Q = e₁: the 2×2 subspace Hessian vanishes
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let q = QuadraticSaddle::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            c,
            DVector::zeros(2),
            DVector::zeros(2),
        )
        .unwrap();
        let mut e1 = DMatrix::zeros(2, 1);
        e1[(0, 0)] = 1.0;
        let op = BlockOperator::new(e1.clone(), e1);
        let z = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]);
        let ctx = ProxContext::new(0.0, z.clone(), 2, 0.5).unwrap();
        let sys = build_system(&q, &ctx, &op, &z, &DVector::zeros(2));
        assert_eq!(sys.h.amax(), 0.0);
        assert!(solve_if_regular(&sys.h, &sys.g).is_none());
        let step = newton_step(&sys).unwrap();
        assert!(step.iter().all(|v| v.is_finite()));
        // the bump μ·diag(1, −1) gives γ̄ = (−g₀/μ, g₁/μ): primal descends, dual ascends
        assert!(step[0] * sys.g[0] <= 0.0);
        assert!(step[1] * sys.g[1] >= 0.0);
    }

    #[test]
    fn nan_system_is_singular() {
        let sys = SubspaceSystem {
            h: DMatrix::from_element(2, 2, f64::NAN),
            g: DVector::from_element(2, 1.0),
            gamma: DVector::zeros(2),
            primal_cols: 1,
        };
        assert!(matches!(newton_step(&sys), Err(SaddleError::SingularSubspace { .. })));
    }

    #[test]
    fn quadratic_inner_solve_finishes_in_one_unit_step() {
        let q = make_quadratic(12, 8, 50.0, 20.0, Some(10.0), false, 4).unwrap();
        let mut rng = seeded_rng(9);
        let z = standard_normal_vector(&mut rng, 20);
        let g = q.grad(&z);
        let mut basis = SubspaceBasis::new(3, 12, 8).unwrap();
        basis
            .refresh_gradient(&g.rows(0, 12).into_owned(), &g.rows(12, 8).into_owned())
            .unwrap();
        let s = standard_normal_vector(&mut rng, 20);
        basis
            .push_step(&s.rows(0, 12).into_owned(), &s.rows(12, 8).into_owned(), 1.0)
            .unwrap();
        basis.sanitize();
        let op = basis.operator();
        let ctx = ProxContext::new(0.0, z.clone(), 12, 0.5).unwrap();
        let out = inner_solve(&q, &ctx, &op, &z, &InnerParams::default()).unwrap();
        assert_eq!(out.iters, 1);
        assert_eq!(out.etas, vec![1.0]);
        assert!(out.grad_norm <= 1e-9 * out.grad_history[0]);
    }

    #[test]
    fn stationary_subspace_returns_immediately() {
        let q = QuadraticSaddle::bilinear_identity(1);
        let op = scalar_op();
        let z = DVector::zeros(2);
        let ctx = ProxContext::new(1.0, z.clone(), 1, 0.5).unwrap();
        let out = inner_solve(&q, &ctx, &op, &z, &InnerParams::default()).unwrap();
        assert_eq!(out.iters, 0);
        assert_eq!(out.gamma.norm(), 0.0);
    }
}
