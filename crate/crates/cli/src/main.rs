use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use sesop_saddle::harness::{self, ExperimentConfig, RunSummary, SolverSpec, SweepParam};
use sesop_saddle::SaddleError;

/// Benchmark runner for SESOP and baseline saddle-point solvers.
#[derive(Parser)]
#[command(name = "saddle-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver of a config and write traces plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Problem and start seed (overrides the config's seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Repeat a run over values of one parameter and aggregate into sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// kappa, subspace_dim or tau
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 10,100,1000
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a config with default-configured solvers and print a comparison table.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated solver kinds; defaults to the config's solvers.
        #[arg(long)]
        solvers: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(config: &Path, seed: Option<u64>) -> Result<ExperimentConfig, SaddleError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn fmt_opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn print_table(summaries: &[RunSummary]) {
    println!(
        "{:<12} {:>4} {:>10} {:>8} {:>12} {:>12} {:>9} {:>8} {:>8} {:>9}",
        "solver", "rep", "status", "iters", "grad_norm", "dist_opt", "to_tol", "grads", "hvps", "wall_s"
    );
    for s in summaries {
        let status = s
            .status
            .map_or_else(|| "error".to_string(), |st| format!("{st:?}").to_lowercase());
        println!(
            "{:<12} {:>4} {:>10} {:>8} {:>12} {:>12} {:>9} {:>8} {:>8} {:>9.3}",
            s.solver,
            s.repetition,
            status,
            s.iterations,
            fmt_opt(s.final_grad_norm.map(|g| format!("{g:.3e}"))),
            fmt_opt(s.final_dist_opt.map(|d| format!("{d:.3e}"))),
            fmt_opt(s.iterations_to_tol),
            s.oracle_counts.grad,
            s.oracle_counts.hvp,
            s.wall_seconds
        );
        if let Some(e) = &s.error {
            println!("    error: {e}");
        }
    }
}

fn dispatch(command: Command) -> Result<(), SaddleError> {
    match command {
        Command::Run { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let dir = out_dir(out, &cfg);
            let summaries = harness::run_experiment(&cfg, &dir)?;
            if !summaries.is_empty() {
                print_table(&summaries);
                println!("wrote {}", dir.display());
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let param: SweepParam = param.parse()?;
            let values = harness::parse_values(&values)?;
            let dir = out_dir(out, &cfg);
            let rows = harness::sweep(&cfg, param, &values, &dir)?;
            print!("{}", harness::sweep_csv(&rows));
        }
        Command::Compare {
            config,
            solvers,
            out,
            seed,
        } => {
            let mut cfg = load(&config, seed)?;
            if let Some(list) = solvers {
                cfg.solvers = list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(SolverSpec::default_for)
                    .collect::<Result<_, _>>()?;
                cfg.validate()?;
            }
            let summaries = match out {
                Some(dir) => harness::run_experiment(&cfg, &dir)?,
                None => harness::execute(&cfg)?.into_iter().map(|o| o.summary).collect(),
            };
            print_table(&summaries);
        }
    }
    Ok(())
}

fn exit_code(e: &SaddleError) -> u8 {
    match e {
        SaddleError::Io { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors count as configuration errors
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
