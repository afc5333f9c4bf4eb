//! Experiment configuration, seeded execution, metrics, sweeps and trace
//! output.

mod config;
mod metrics;
mod runner;
mod sweep;

pub use config::{AdmmSpec, BaselineSpec, ExperimentConfig, SesopSpec, SolverSpec, StartSpec};
pub use metrics::mean_convergence_rate;
pub use runner::{
    execute, run_experiment, start_point, trace_csv, trace_file_name, RunOutput, RunSummary, CSV_HEADER, THREADS_ENV,
};
pub use sweep::{apply_param, parse_values, sweep, sweep_csv, sweep_rows, SweepParam, SweepRow, SWEEP_HEADER};
