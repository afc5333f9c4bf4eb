//! Sequential subspace optimization (SESOP) for smooth saddle-point problems
//! `min_x max_y f(x, y)`, with first-order and ADMM baselines and an
//! experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod inner;
pub mod linesearch;
pub mod problems;
pub mod prox;
pub mod sesop;
pub mod subspace;
pub mod trace;

pub use baselines::{egda_run, gda_run, ogda_run, BaselineConfig};
pub use error::{Result, SaddleError};
pub use linesearch::{saddle_backtrack, LineSearchParams};
pub use problems::{PrimalDualPoint, Problem, ProblemSpec, SaddleOracle};
pub use prox::ProxContext;
pub use sesop::{sesop_run, sesop_run_with, SesopConfig, SesopHooks};
pub use subspace::{BlockOperator, SubspaceBasis};
pub use trace::{IterateTrace, SolveResult, SolveStatus, TraceRecord, TraceSink};
