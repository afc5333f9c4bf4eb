use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SolverSpec};
use super::runner::{execute, run_experiment, RunSummary};
use crate::error::{Result, SaddleError};
use crate::problems::ProblemSpec;

pub const SWEEP_HEADER: &str =
    "param,value,kappa_inv,solver,mean_convergence_rate,iterations_to_tol,converged_runs,wall_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Condition numbers of the quadratic blocks (or of `C` when bilinear).
    Kappa,
    /// SESOP subspace dimension `d`.
    SubspaceDim,
    /// SESOP initial proximal weight.
    Tau,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Kappa => "kappa",
            SweepParam::SubspaceDim => "subspace_dim",
            SweepParam::Tau => "tau",
        }
    }
}

impl FromStr for SweepParam {
    type Err = SaddleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa" => Ok(SweepParam::Kappa),
            "subspace_dim" | "d" => Ok(SweepParam::SubspaceDim),
            "tau" => Ok(SweepParam::Tau),
            other => Err(SaddleError::Config(format!(
                "unknown sweep parameter '{other}' (expected kappa, subspace_dim or tau)"
            ))),
        }
    }
}

/// One aggregated (value, solver) row; averages are over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub kappa_inv: Option<f64>,
    pub solver: String,
    /// Mean over the repetitions where the rate is defined.
    pub mean_convergence_rate: Option<f64>,
    /// Mean over the repetitions that reached the tolerance.
    pub iterations_to_tol: Option<f64>,
    pub converged_runs: usize,
    pub wall_s: f64,
}

/// A copy of `config` with `param` set to `value`.
pub fn apply_param(config: &ExperimentConfig, param: SweepParam, value: f64) -> Result<ExperimentConfig> {
    if !value.is_finite() {
        return Err(SaddleError::Config(format!("sweep value {value} is not finite")));
    }
    let mut cfg = config.clone();
    match param {
        SweepParam::Kappa => match &mut cfg.problem {
            ProblemSpec::Quadratic {
                bilinear: true,
                kappa_c,
                ..
            } => *kappa_c = Some(value),
            ProblemSpec::Quadratic {
                kappa_x,
                kappa_y,
                kappa_c,
                ..
            } => {
                *kappa_x = value;
                *kappa_y = value;
                if kappa_c.is_some() {
                    *kappa_c = Some(value);
                }
            }
            other => {
                return Err(SaddleError::Config(format!(
                    "kappa sweep needs a quadratic problem, got {}",
                    other.kind()
                )))
            }
        },
        SweepParam::SubspaceDim | SweepParam::Tau => {
            let mut touched = false;
            for s in &mut cfg.solvers {
                if let SolverSpec::Sesop(spec) = s {
                    touched = true;
                    if param == SweepParam::Tau {
                        spec.tau0 = Some(value);
                    } else if value.fract() == 0.0 && value >= 0.0 {
                        spec.d = value as usize;
                    } else {
                        return Err(SaddleError::Config(format!(
                            "subspace dimension must be an integer, got {value}"
                        )));
                    }
                }
            }
            if !touched {
                return Err(SaddleError::Config(format!(
                    "{} sweep needs at least one sesop solver",
                    param.name()
                )));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn aggregate(param: SweepParam, value: f64, summaries: &[RunSummary], ids: &[String]) -> Vec<SweepRow> {
    let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    ids.iter()
        .map(|id| {
            let runs: Vec<&RunSummary> = summaries.iter().filter(|s| &s.solver == id).collect();
            SweepRow {
                param,
                value,
                kappa_inv: (param == SweepParam::Kappa).then(|| 1.0 / value),
                solver: id.clone(),
                mean_convergence_rate: mean(runs.iter().filter_map(|r| r.mean_convergence_rate).collect()),
                iterations_to_tol: mean(
                    runs.iter()
                        .filter_map(|r| r.iterations_to_tol.map(|k| k as f64))
                        .collect(),
                ),
                converged_runs: runs.iter().filter(|r| r.converged).count(),
                wall_s: mean(runs.iter().map(|r| r.wall_seconds).collect()).unwrap_or(0.0),
            }
        })
        .collect()
}

/// Runs the sweep in memory and returns one row per (value, solver).
pub fn sweep_rows(config: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    check_values(values)?;
    let mut rows = Vec::new();
    for &v in values {
        let cfg = apply_param(config, param, v)?;
        let summaries: Vec<RunSummary> = execute(&cfg)?.into_iter().map(|o| o.summary).collect();
        rows.extend(aggregate(param, v, &summaries, &cfg.solver_ids()));
    }
    Ok(rows)
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(SaddleError::Config("sweep needs at least one value".into()));
    }
    Ok(())
}

/// Runs one experiment per value, each in its own `<param>_<value>`
/// subdirectory of `out_dir`, and writes the aggregate `sweep.csv`.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, values: &[f64], out_dir: &Path) -> Result<Vec<SweepRow>> {
    check_values(values)?;
    // fail on an inapplicable parameter before running anything
    let configs = values
        .iter()
        .map(|&v| apply_param(config, param, v))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| SaddleError::io(out_dir, e))?;
    let mut rows = Vec::new();
    for (cfg, &v) in configs.iter().zip(values) {
        let dir = out_dir.join(format!("{}_{v}", param.name()));
        let summaries = run_experiment(cfg, &dir)?;
        rows.extend(aggregate(param, v, &summaries, &cfg.solver_ids()));
    }
    let path = out_dir.join("sweep.csv");
    std::fs::write(&path, sweep_csv(&rows)).map_err(|e| SaddleError::io(&path, e))?;
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.param.name(),
            r.value,
            opt(r.kappa_inv),
            r.solver,
            opt(r.mean_convergence_rate),
            opt(r.iterations_to_tol),
            r.converged_runs,
            r.wall_s
        );
    }
    out
}

/// Parses a comma-separated list of numbers such as `10,100,1e3`.
pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| SaddleError::Config(format!("cannot parse sweep value '{s}'")))
        })
        .collect()
}
