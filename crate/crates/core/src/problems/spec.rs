use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::matrix::{derive_seed, write_matrix};
use super::{
    make_lasso, make_quadratic, quadratic_solution, DiracGan, QuadraticSaddle, SaddleOracle, SmoothLassoSaddle,
};
use crate::error::{Result, SaddleError};

fn one() -> f64 {
    1.0
}
fn default_lasso_rows() -> usize {
    150
}
fn default_lasso_features() -> usize {
    500
}
fn default_smoothing() -> f64 {
    1e-3
}
fn default_dirac_dim() -> usize {
    100
}

/// Serializable description of a benchmark problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        m: usize,
        n: usize,
        #[serde(default = "one")]
        kappa_x: f64,
        #[serde(default = "one")]
        kappa_y: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa_c: Option<f64>,
        #[serde(default)]
        bilinear: bool,
    },
    Lasso {
        #[serde(default = "default_lasso_rows")]
        m_rows: usize,
        #[serde(default = "default_lasso_features")]
        n_feat: usize,
        #[serde(default = "default_smoothing")]
        s: f64,
        #[serde(default = "one")]
        rho: f64,
    },
    Dirac {
        #[serde(default = "default_dirac_dim")]
        n: usize,
    },
}

impl ProblemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Quadratic { bilinear: true, .. } => "bilinear",
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::Lasso { .. } => "lasso",
            ProblemSpec::Dirac { .. } => "dirac",
        }
    }

    /// Whether the raw Hessian is stable (strongly convex-concave), which
    /// decides the default proximal weight.
    pub fn is_strongly_convex_concave(&self) -> bool {
        matches!(self, ProblemSpec::Quadratic { bilinear: false, .. })
    }

    pub fn build(&self, seed: u64) -> Result<Problem> {
        match *self {
            ProblemSpec::Quadratic {
                m,
                n,
                kappa_x,
                kappa_y,
                kappa_c,
                bilinear,
            } => Ok(Problem::Quadratic(make_quadratic(
                m, n, kappa_x, kappa_y, kappa_c, bilinear, seed,
            )?)),
            ProblemSpec::Lasso { m_rows, n_feat, s, rho } => {
                Ok(Problem::Lasso(make_lasso(m_rows, n_feat, s, rho, seed)?))
            }
            ProblemSpec::Dirac { n } => {
                if n == 0 {
                    return Err(SaddleError::InvalidParameter("Dirac dimension must be positive".into()));
                }
                Ok(Problem::Dirac(DiracGan::sample(n, derive_seed(seed, 20))?))
            }
        }
    }
}

/// A concrete problem instance built from a [`ProblemSpec`].
#[derive(Debug, Clone)]
pub enum Problem {
    Quadratic(QuadraticSaddle),
    Lasso(SmoothLassoSaddle),
    Dirac(DiracGan),
}

impl Problem {
    /// The known saddle point, if the problem has a closed form one.
    pub fn known_solution(&self) -> Option<DVector<f64>> {
        match self {
            Problem::Quadratic(q) => quadratic_solution(q).ok().map(|p| p.into_vector()),
            Problem::Dirac(g) => Some(g.equilibrium().into_vector()),
            Problem::Lasso(_) => None,
        }
    }

    /// Dumps every problem matrix into `dir`, returning the written paths.
    pub fn dump_matrices(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut dump = |name: &str, m: &nalgebra::DMatrix<f64>| -> Result<()> {
            let path = dir.join(format!("{name}.bin"));
            write_matrix(&path, m)?;
            written.push(path);
            Ok(())
        };
        match self {
            Problem::Quadratic(q) => {
                dump("ax", q.ax())?;
                dump("ay", q.ay())?;
                dump("c", q.c())?;
            }
            Problem::Lasso(l) => dump("a", l.a())?,
            Problem::Dirac(g) => dump(
                "c_data",
                &nalgebra::DMatrix::from_column_slice(g.c_data().len(), 1, g.c_data().as_slice()),
            )?,
        }
        Ok(written)
    }
}

impl SaddleOracle for Problem {
    fn dims(&self) -> (usize, usize) {
        match self {
            Problem::Quadratic(p) => p.dims(),
            Problem::Lasso(p) => p.dims(),
            Problem::Dirac(p) => p.dims(),
        }
    }
    fn value(&self, z: &DVector<f64>) -> f64 {
        match self {
            Problem::Quadratic(p) => p.value(z),
            Problem::Lasso(p) => p.value(z),
            Problem::Dirac(p) => p.value(z),
        }
    }
    fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            Problem::Quadratic(p) => p.grad(z),
            Problem::Lasso(p) => p.grad(z),
            Problem::Dirac(p) => p.grad(z),
        }
    }
    fn hvp(&self, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Problem::Quadratic(p) => p.hvp(z, v),
            Problem::Lasso(p) => p.hvp(z, v),
            Problem::Dirac(p) => p.hvp(z, v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json() {
        let specs = vec![
            ProblemSpec::Quadratic {
                m: 30,
                n: 10,
                kappa_x: 1e3,
                kappa_y: 1e2,
                kappa_c: None,
                bilinear: false,
            },
            ProblemSpec::Lasso {
                m_rows: 15,
                n_feat: 50,
                s: 1e-3,
                rho: 1.0,
            },
            ProblemSpec::Dirac { n: 7 },
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: ProblemSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn defaults_fill_desk_scale_sizes() {
        let spec: ProblemSpec = serde_json::from_str(r#"{"kind":"lasso"}"#).unwrap();
        assert_eq!(
            spec,
            ProblemSpec::Lasso {
                m_rows: 150,
                n_feat: 500,
                s: 1e-3,
                rho: 1.0
            }
        );
        let spec: ProblemSpec = serde_json::from_str(r#"{"kind":"dirac"}"#).unwrap();
        assert_eq!(spec, ProblemSpec::Dirac { n: 100 });
        assert!(serde_json::from_str::<ProblemSpec>(r#"{"kind":"dirac","bogus":1}"#).is_err());
    }

    #[test]
    fn built_problems_expose_solutions() {
        let p = ProblemSpec::Dirac { n: 5 }.build(1).unwrap();
        let z = p.known_solution().unwrap();
        assert!(p.grad(&z).norm() < 1e-12);
        let p = ProblemSpec::Lasso {
            m_rows: 5,
            n_feat: 8,
            s: 1e-3,
            rho: 1.0,
        }
        .build(1)
        .unwrap();
        assert!(p.known_solution().is_none());
        assert_eq!(p.dims(), (16, 8));
    }
}
