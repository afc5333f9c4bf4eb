use std::fmt::Write as _;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::{info, warn};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SolverSpec, StartSpec};
use super::metrics::mean_convergence_rate;
use crate::admm::{admm_solve, AdmmBooster, AdmmState};
use crate::baselines::{egda_run, gda_run, ogda_run};
use crate::error::{Result, SaddleError};
use crate::problems::{derive_seed, seeded_rng, standard_normal_vector, CountingOracle, OracleCounts};
use crate::problems::{PrimalDualPoint, Problem, SaddleOracle};
use crate::sesop::{sesop_run_with, SesopHooks};
use crate::trace::{IterateTrace, SolveResult, SolveStatus};

/// Environment variable capping the number of cells run in parallel.
pub const THREADS_ENV: &str = "SADDLE_BENCH_THREADS";

pub const CSV_HEADER: &str = "iter,grad_norm,dist_opt,value,eta_outer,tau,inner_iters,ls_evals,elapsed_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solver: String,
    pub repetition: usize,
    /// `None` when the solver stopped with an error.
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
    pub converged: bool,
    /// Outer iterations taken.
    pub iterations: usize,
    pub final_grad_norm: Option<f64>,
    pub final_dist_opt: Option<f64>,
    /// First iteration reaching the configured gradient-norm tolerance.
    pub iterations_to_tol: Option<usize>,
    pub mean_convergence_rate: Option<f64>,
    pub wall_seconds: f64,
    pub oracle_counts: OracleCounts,
    /// Worst ADMM `w`-update root residual, for solvers that run ADMM sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_w_residual: Option<f64>,
}

/// One (solver, repetition) cell: its summary and full trace.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub trace: IterateTrace,
    pub final_point: Option<DVector<f64>>,
}

/// The starting point for repetition `rep`.
pub fn start_point(config: &ExperimentConfig, problem: &Problem, rep: usize) -> Result<PrimalDualPoint> {
    let (m, n) = problem.dims();
    let mut rng = seeded_rng(derive_seed(config.seed, 100 + rep as u64));
    let z = match config.start {
        StartSpec::Zeros => DVector::zeros(m + n),
        StartSpec::StandardNormal { scale } => standard_normal_vector(&mut rng, m + n) * scale,
        StartSpec::NearSolution { scale } => {
            let star = problem.known_solution().ok_or_else(|| {
                SaddleError::Config(format!(
                    "near_solution start needs a known solution; {} has none",
                    config.problem.kind()
                ))
            })?;
            star + standard_normal_vector(&mut rng, m + n) * scale
        }
    };
    PrimalDualPoint::from_concat(z, m)
}

/// Runs every (solver, repetition) cell in memory, without writing files.
///
/// All cells share one problem instance built from `config.seed`. Solver
/// failures are recorded in the summaries; only configuration problems are
/// returned as errors.
pub fn execute(config: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    config.validate()?;
    let problem = config.problem.build(config.seed).map_err(|e| match e {
        SaddleError::InvalidParameter(msg) | SaddleError::NoUniqueSolution(msg) => SaddleError::Config(msg),
        other => other,
    })?;
    let z_star = problem.known_solution();
    let ids = config.solver_ids();
    let starts = (0..config.repetitions)
        .map(|rep| start_point(config, &problem, rep))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..config.solvers.len())
        .flat_map(|s| (0..config.repetitions).map(move |r| (s, r)))
        .collect();
    let run_cell = |&(s, rep): &(usize, usize)| {
        run_one(
            config,
            &config.solvers[s],
            &ids[s],
            rep,
            &problem,
            &starts[rep],
            z_star.as_ref(),
        )
    };
    let pool = thread_pool()?;
    Ok(pool.install(|| cells.par_iter().map(run_cell).collect()))
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|t| *t > 0)
            .ok_or_else(|| SaddleError::Config(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| SaddleError::Config(format!("cannot build thread pool: {e}")))
}

fn run_one(
    config: &ExperimentConfig,
    solver: &SolverSpec,
    id: &str,
    rep: usize,
    problem: &Problem,
    z0: &PrimalDualPoint,
    z_star: Option<&DVector<f64>>,
) -> RunOutput {
    let oracle = CountingOracle::new(problem);
    let start = Instant::now();
    let mut max_w_residual = None;
    let outcome: Result<SolveResult> = match solver {
        SolverSpec::Sesop(spec) => {
            let cfg = spec.resolve(&config.problem);
            match (spec.boost_every_k, problem) {
                (Some(k), Problem::Lasso(lasso)) => AdmmBooster::new(lasso).and_then(|mut booster| {
                    let hooks = SesopHooks {
                        sink: None,
                        booster: Some(&mut booster),
                        boost_every: k,
                    };
                    let res = sesop_run_with(&oracle, z0, &cfg, z_star, hooks);
                    max_w_residual = Some(booster.max_w_residual);
                    res
                }),
                _ => sesop_run_with(&oracle, z0, &cfg, z_star, SesopHooks::default()),
            }
        }
        SolverSpec::Gda(b) => gda_run(&oracle, z0, &b.resolve(), z_star, None),
        SolverSpec::Ogda(b) => ogda_run(&oracle, z0, &b.resolve(), z_star, None),
        SolverSpec::Egda(b) => egda_run(&oracle, z0, &b.resolve(), z_star, None),
        SolverSpec::Admm(a) => match problem {
            Problem::Lasso(lasso) => AdmmState::from_point(lasso, z0.as_vector()).map(|mut state| {
                let (res, worst) = admm_solve(&oracle, lasso, &mut state, a.max_iters, a.eps, None);
                max_w_residual = Some(worst);
                res
            }),
            _ => Err(SaddleError::Config("the admm solver requires a lasso problem".into())),
        },
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    let counts = oracle.counts();

    match outcome {
        Ok(result) => {
            let trace = result.trace;
            let last = trace.last();
            let rate = trace.distances().and_then(|d| {
                let k = config.rate_steps.unwrap_or(d.len().saturating_sub(1)).max(1);
                mean_convergence_rate(&d, k).ok()
            });
            let summary = RunSummary {
                solver: id.to_string(),
                repetition: rep,
                status: Some(result.status),
                error: None,
                converged: result.status == SolveStatus::Converged,
                iterations: last.map_or(0, |r| r.iter),
                final_grad_norm: last.map(|r| r.grad_norm),
                final_dist_opt: last.and_then(|r| r.dist_opt),
                iterations_to_tol: trace.iterations_to(config.tolerance),
                mean_convergence_rate: rate,
                wall_seconds,
                oracle_counts: counts,
                max_w_residual,
            };
            info!(
                "{id} rep {rep}: {:?} after {} iterations, |g| = {:.3e}",
                result.status,
                summary.iterations,
                summary.final_grad_norm.unwrap_or(f64::NAN)
            );
            RunOutput {
                summary,
                trace,
                final_point: Some(result.z),
            }
        }
        Err(e) => {
            warn!("{id} rep {rep} failed: {e}");
            RunOutput {
                summary: RunSummary {
                    solver: id.to_string(),
                    repetition: rep,
                    status: None,
                    error: Some(e.to_string()),
                    converged: false,
                    iterations: 0,
                    final_grad_norm: None,
                    final_dist_opt: None,
                    iterations_to_tol: None,
                    mean_convergence_rate: None,
                    wall_seconds,
                    oracle_counts: counts,
                    max_w_residual,
                },
                trace: IterateTrace::default(),
                final_point: None,
            }
        }
    }
}

/// Renders a trace in the fixed CSV schema. `elapsed_s` is left empty
/// unless `timing` is set, so that bodies are reproducible.
pub fn trace_csv(trace: &IterateTrace, timing: bool) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        let dist = r.dist_opt.map(|d| d.to_string()).unwrap_or_default();
        let elapsed = if timing { r.elapsed_s.to_string() } else { String::new() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.iter, r.grad_norm, dist, r.value, r.eta_outer, r.tau, r.inner_iters, r.ls_evals, elapsed
        );
    }
    out
}

pub fn trace_file_name(solver: &str, rep: usize) -> String {
    format!("{solver}_rep{rep}.csv")
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    metadata: Metadata<'a>,
    runs: Vec<&'a RunSummary>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    created_unix_s: u64,
    crate_version: &'static str,
    problem_kind: &'static str,
    config: &'a ExperimentConfig,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| SaddleError::io(path, e))
}

/// Runs the experiment and writes one CSV per (solver, repetition) plus
/// `summary.json` into `out_dir`.
///
/// An empty solver list only logs a warning and writes nothing.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<RunSummary>> {
    if config.solvers.is_empty() {
        config.validate()?;
        warn!("no solvers configured; nothing to run");
        return Ok(Vec::new());
    }
    let outputs = execute(config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| SaddleError::io(out_dir, e))?;
    if config.dump_matrices {
        let dir = out_dir.join("matrices");
        std::fs::create_dir_all(&dir).map_err(|e| SaddleError::io(&dir, e))?;
        config.problem.build(config.seed)?.dump_matrices(&dir)?;
    }
    for o in &outputs {
        let path = out_dir.join(trace_file_name(&o.summary.solver, o.summary.repetition));
        write_file(&path, &trace_csv(&o.trace, config.timing))?;
    }
    let summaries: Vec<RunSummary> = outputs.into_iter().map(|o| o.summary).collect();
    let file = SummaryFile {
        metadata: Metadata {
            created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            crate_version: env!("CARGO_PKG_VERSION"),
            problem_kind: config.problem.kind(),
            config,
        },
        runs: summaries.iter().collect(),
    };
    let json = serde_json::to_string_pretty(&file).expect("summary serializes");
    write_file(&out_dir.join("summary.json"), &json)?;
    Ok(summaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ProblemSpec;
    use crate::trace::TraceRecord;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"problem": {"kind": "quadratic", "m": 6, "n": 4, "kappa_x": 10.0, "kappa_y": 5.0},
                "seed": 11, "repetitions": 2,
                "solvers": [{"kind": "sesop"}, {"kind": "gda", "max_iters": 3000}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn csv_layout() {
        let trace = IterateTrace {
            records: vec![TraceRecord {
                iter: 0,
                grad_norm: 0.5,
                dist_opt: None,
                value: -1.25,
                eta_outer: 1.0,
                tau: 0.0,
                inner_iters: 2,
                ls_evals: 1,
                elapsed_s: 0.125,
            }],
        };
        assert_eq!(
            trace_csv(&trace, false),
            format!("{CSV_HEADER}\n0,0.5,,-1.25,1,0,2,1,\n")
        );
        assert!(trace_csv(&trace, true).ends_with(",0.125\n"));
    }

    #[test]
    fn execute_runs_every_cell() {
        let cfg = small_config();
        let out = execute(&cfg).unwrap();
        assert_eq!(out.len(), 4);
        for o in &out {
            assert!(o.summary.converged, "{:?}", o.summary);
            assert!(o.summary.final_dist_opt.unwrap() < 1e-6);
            assert!(o.summary.oracle_counts.grad > 0);
        }
        // sesop uses Hessian-vector products, gda never does
        assert!(out[0].summary.oracle_counts.hvp > 0);
        assert_eq!(out[2].summary.oracle_counts.hvp, 0);
        // repetitions start from different points
        assert_ne!(out[0].trace.records[0].grad_norm, out[1].trace.records[0].grad_norm);
    }

    #[test]
    fn near_solution_requires_known_solution() {
        let mut cfg = small_config();
        cfg.problem = ProblemSpec::Lasso {
            m_rows: 5,
            n_feat: 4,
            s: 1e-3,
            rho: 1.0,
        };
        cfg.start = StartSpec::NearSolution { scale: 0.1 };
        assert!(matches!(execute(&cfg), Err(SaddleError::Config(_))));
    }

    #[test]
    fn writes_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config();
        let summaries = run_experiment(&cfg, dir.path()).unwrap();
        assert_eq!(summaries.len(), 4);
        for name in [
            "sesop_rep0.csv",
            "sesop_rep1.csv",
            "gda_rep0.csv",
            "gda_rep1.csv",
            "summary.json",
        ] {
            assert!(dir.path().join(name).is_file(), "{name}");
        }
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["runs"].as_array().unwrap().len(), 4);
        assert_eq!(json["metadata"]["problem_kind"], "quadratic");
    }

    #[test]
    fn empty_solver_list_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut cfg = small_config();
        cfg.solvers.clear();
        assert!(run_experiment(&cfg, &out).unwrap().is_empty());
        assert!(!out.exists());
    }
}
