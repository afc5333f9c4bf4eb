use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// One outer iteration, recorded at the iterate `z_k` before the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub grad_norm: f64,
    /// `‖z_k − z*‖`, when the solution is known.
    pub dist_opt: Option<f64>,
    pub value: f64,
    /// Step taken from `z_k` (0 on the final record).
    pub eta_outer: f64,
    pub tau: f64,
    pub inner_iters: usize,
    pub ls_evals: usize,
    pub elapsed_s: f64,
}

/// Receives trace records as a run progresses.
pub trait TraceSink {
    fn record(&mut self, record: &TraceRecord);
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub records: Vec<TraceRecord>,
}

impl TraceSink for IterateTrace {
    fn record(&mut self, record: &TraceRecord) {
        self.records.push(record.clone());
    }
}

impl IterateTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// First iteration whose gradient norm is at most `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.grad_norm <= tol).map(|r| r.iter)
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_norm).collect()
    }

    /// Distances to the optimum, if every record carries one.
    pub fn distances(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.dist_opt).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    /// The oracle produced a non-finite value or gradient.
    Diverged,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub z: DVector<f64>,
    pub trace: IterateTrace,
    pub status: SolveStatus,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Forwards records to an optional external sink while keeping a copy.
pub(crate) struct Recorder<'a> {
    pub trace: IterateTrace,
    sink: Option<&'a mut dyn TraceSink>,
}

impl<'a> Recorder<'a> {
    pub fn new(sink: Option<&'a mut dyn TraceSink>) -> Self {
        Recorder {
            trace: IterateTrace::default(),
            sink,
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        if let Some(s) = self.sink.as_deref_mut() {
            s.record(&record);
        }
        self.trace.records.push(record);
    }
}

pub(crate) fn distance(z: &DVector<f64>, z_star: Option<&DVector<f64>>) -> Option<f64> {
    z_star.map(|s| (z - s).norm())
}
