//! Primal/dual search subspaces `P` and `Q`.
//!
//! Directions are stored as column pairs, one pair per update epoch, so the
//! two sides always evict together. Columns are unit-normalized on entry. A
//! side whose direction is zero is kept as an empty slot and excluded from
//! the block operator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};

/// Residual norm below which a normalized column counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionTag {
    CurrentGrad,
    PrevGrad,
    PrevStep,
}

#[derive(Debug, Clone, PartialEq)]
struct Epoch {
    p: Option<DVector<f64>>,
    q: Option<DVector<f64>>,
    tag: DirectionTag,
}

fn normalized(v: &DVector<f64>) -> Option<DVector<f64>> {
    let norm = v.norm();
    (norm > 0.0 && norm.is_finite()).then(|| v / norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    max_dim: usize,
    primal_dim: usize,
    dual_dim: usize,
    /// Oldest first.
    epochs: Vec<Epoch>,
}

impl SubspaceBasis {
    /// An empty basis holding at most `max_dim` column pairs.
    pub fn new(max_dim: usize, primal_dim: usize, dual_dim: usize) -> Result<Self> {
        if max_dim == 0 {
            return Err(SaddleError::InvalidParameter(
                "subspace dimension must be at least 1".into(),
            ));
        }
        if primal_dim == 0 || dual_dim == 0 {
            return Err(SaddleError::InvalidParameter("problem blocks must be non-empty".into()));
        }
        Ok(SubspaceBasis {
            max_dim,
            primal_dim,
            dual_dim,
            epochs: Vec::new(),
        })
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Number of column pairs.
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// Oldest first.
    pub fn tags(&self) -> Vec<DirectionTag> {
        self.epochs.iter().map(|e| e.tag).collect()
    }

    /// Non-empty primal columns (`m`).
    pub fn primal_columns(&self) -> usize {
        self.epochs.iter().filter(|e| e.p.is_some()).count()
    }

    /// Non-empty dual columns (`n`).
    pub fn dual_columns(&self) -> usize {
        self.epochs.iter().filter(|e| e.q.is_some()).count()
    }

    /// Capacity for step directions: the current and previous gradients take
    /// the first two slots.
    fn step_capacity(&self) -> usize {
        self.max_dim.saturating_sub(2)
    }

    fn count(&self, tag: DirectionTag) -> usize {
        self.epochs.iter().filter(|e| e.tag == tag).count()
    }

    fn evict_oldest(&mut self, tag: DirectionTag) -> bool {
        match self.epochs.iter().position(|e| e.tag == tag) {
            Some(i) => {
                self.epochs.remove(i);
                true
            }
            None => false,
        }
    }

    fn check_lengths(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        if x.len() != self.primal_dim {
            return Err(SaddleError::DimensionMismatch {
                expected: self.primal_dim,
                got: x.len(),
            });
        }
        if y.len() != self.dual_dim {
            return Err(SaddleError::DimensionMismatch {
                expected: self.dual_dim,
                got: y.len(),
            });
        }
        Ok(())
    }

    /// Installs the current gradient. The previous current-gradient pair
    /// becomes the previous-gradient pair, replacing any older one.
    pub fn refresh_gradient(&mut self, g_x: &DVector<f64>, g_y: &DVector<f64>) -> Result<()> {
        self.check_lengths(g_x, g_y)?;
        let p = normalized(g_x);
        let q = normalized(g_y);
        if p.is_none() && q.is_none() {
            return Err(SaddleError::DegenerateDirection(
                "cannot refresh the subspace with a zero gradient".into(),
            ));
        }
        self.epochs.retain(|e| e.tag != DirectionTag::PrevGrad);
        for e in &mut self.epochs {
            if e.tag == DirectionTag::CurrentGrad {
                e.tag = DirectionTag::PrevGrad;
            }
        }
        if self.max_dim == 1 {
            self.epochs.retain(|e| e.tag != DirectionTag::PrevGrad);
        }
        self.epochs.push(Epoch {
            p,
            q,
            tag: DirectionTag::CurrentGrad,
        });
        while self.epochs.len() > self.max_dim {
            if !self.evict_oldest(DirectionTag::PrevStep) {
                self.evict_oldest(DirectionTag::PrevGrad);
            }
        }
        Ok(())
    }

    /// Appends a step direction pair, evicting the oldest steps (FIFO) so the
    /// basis fits after the next gradient refresh. Steps shorter than
    /// `1e−14·scale` are skipped; returns whether the pair was stored.
    pub fn push_step(&mut self, p_x: &DVector<f64>, p_y: &DVector<f64>, scale: f64) -> Result<bool> {
        self.check_lengths(p_x, p_y)?;
        let norm = (p_x.norm_squared() + p_y.norm_squared()).sqrt();
        if norm == 0.0 || norm < 1e-14 * scale {
            log::debug!("skipping step direction of norm {norm:e}");
            return Ok(false);
        }
        let capacity = self.step_capacity();
        if capacity == 0 {
            return Ok(false);
        }
        self.epochs.push(Epoch {
            p: normalized(p_x),
            q: normalized(p_y),
            tag: DirectionTag::PrevStep,
        });
        while self.count(DirectionTag::PrevStep) > capacity {
            self.evict_oldest(DirectionTag::PrevStep);
        }
        Ok(true)
    }

    /// Keeps only the current-gradient pair.
    pub fn reset_to_gradient(&mut self) {
        self.epochs.retain(|e| e.tag == DirectionTag::CurrentGrad);
    }

    /// Drops every epoch whose primal or dual column is dependent on the
    /// retained ones (modified Gram–Schmidt, current gradient first, then
    /// newest to oldest). The current-gradient pair is never dropped.
    pub fn sanitize(&mut self) {
        let mut order: Vec<usize> = (0..self.epochs.len()).collect();
        order.sort_by_key(|&i| {
            let rank = match self.epochs[i].tag {
                DirectionTag::CurrentGrad => 0,
                DirectionTag::PrevGrad => 1,
                DirectionTag::PrevStep => 2,
            };
            (rank, std::cmp::Reverse(i))
        });
        let mut ortho_p: Vec<DVector<f64>> = Vec::new();
        let mut ortho_q: Vec<DVector<f64>> = Vec::new();
        let mut keep = vec![false; self.epochs.len()];
        for &i in &order {
            let e = &mut self.epochs[i];
            if let Some(p) = e.p.as_mut() {
                p.normalize_mut();
            }
            if let Some(q) = e.q.as_mut() {
                q.normalize_mut();
            }
            let current = e.tag == DirectionTag::CurrentGrad;
            let rp = e.p.as_ref().map(|p| residual(p, &ortho_p));
            let rq = e.q.as_ref().map(|q| residual(q, &ortho_q));
            let independent = |r: &Option<DVector<f64>>| r.as_ref().is_some_and(|r| r.norm() >= DEPENDENCE_TOL);
            if current || (independent(&rp) && independent(&rq)) {
                keep[i] = true;
                if let Some(r) = rp.filter(|r| r.norm() >= DEPENDENCE_TOL) {
                    ortho_p.push(r.normalize());
                } else if current {
                    e.p = None;
                }
                if let Some(r) = rq.filter(|r| r.norm() >= DEPENDENCE_TOL) {
                    ortho_q.push(r.normalize());
                } else if current {
                    e.q = None;
                }
            }
        }
        let mut idx = 0;
        self.epochs.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
    }

    /// The block operator `R = diag(P, Q)` over the non-empty columns, oldest first.
    pub fn operator(&self) -> BlockOperator {
        let p_cols: Vec<&DVector<f64>> = self.epochs.iter().filter_map(|e| e.p.as_ref()).collect();
        let q_cols: Vec<&DVector<f64>> = self.epochs.iter().filter_map(|e| e.q.as_ref()).collect();
        let stack = |rows: usize, cols: &[&DVector<f64>]| {
            let mut m = DMatrix::zeros(rows, cols.len());
            for (j, c) in cols.iter().enumerate() {
                m.set_column(j, c);
            }
            m
        };
        BlockOperator {
            p: stack(self.primal_dim, &p_cols),
            q: stack(self.dual_dim, &q_cols),
        }
    }
}

fn residual(v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut r = v.clone();
    for b in basis {
        let proj = b.dot(&r);
        r.axpy(-proj, b, 1.0);
    }
    r
}

/// `R = diag(P, Q)`: maps subspace coordinates `γ = [α; β]` to full-space
/// directions and back.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    p: DMatrix<f64>,
    q: DMatrix<f64>,
}

impl BlockOperator {
    pub fn new(p: DMatrix<f64>, q: DMatrix<f64>) -> Self {
        BlockOperator { p, q }
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `(m, n)`
    pub fn subspace_dims(&self) -> (usize, usize) {
        (self.p.ncols(), self.q.ncols())
    }

    pub fn dim(&self) -> usize {
        self.p.ncols() + self.q.ncols()
    }

    pub fn full_dim(&self) -> usize {
        self.p.nrows() + self.q.nrows()
    }

    /// `R·γ = [P·α; Q·β]`
    pub fn lift(&self, gamma: &DVector<f64>) -> DVector<f64> {
        let (m, n) = self.subspace_dims();
        let (pm, qn) = (self.p.nrows(), self.q.nrows());
        let mut out = DVector::zeros(pm + qn);
        out.rows_mut(0, pm).gemv(1.0, &self.p, &gamma.rows(0, m), 0.0);
        out.rows_mut(pm, qn).gemv(1.0, &self.q, &gamma.rows(m, n), 0.0);
        out
    }

    /// `Rᵀ·v = [Pᵀvₓ; Qᵀvᵧ]`
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let (m, n) = self.subspace_dims();
        let (pm, qn) = (self.p.nrows(), self.q.nrows());
        let mut out = DVector::zeros(m + n);
        out.rows_mut(0, m).gemv_tr(1.0, &self.p, &v.rows(0, pm), 0.0);
        out.rows_mut(m, n).gemv_tr(1.0, &self.q, &v.rows(pm, qn), 0.0);
        out
    }

    /// Column `j` of `R` as a full-space vector.
    pub fn column(&self, j: usize) -> DVector<f64> {
        let (m, _) = self.subspace_dims();
        let (pm, qn) = (self.p.nrows(), self.q.nrows());
        let mut out = DVector::zeros(pm + qn);
        if j < m {
            out.rows_mut(0, pm).copy_from(&self.p.column(j));
        } else {
            out.rows_mut(pm, qn).copy_from(&self.q.column(j - m));
        }
        out
    }

    /// `Rᵀ·T·R / τ = diag(PᵀP, −QᵀQ)`
    pub fn dampening_gram(&self) -> DMatrix<f64> {
        let (m, n) = self.subspace_dims();
        let mut g = DMatrix::zeros(m + n, m + n);
        g.view_mut((0, 0), (m, m)).copy_from(&self.p.tr_mul(&self.p));
        g.view_mut((m, m), (n, n)).copy_from(&(-self.q.tr_mul(&self.q)));
        g
    }
}
