use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    StepTol,
    MaxIters,
    MmlsFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::StepTol => "step_tol",
            Termination::MaxIters => "max_iters",
            Termination::MmlsFailure => "mmls_failure",
        }
    }

    pub(super) fn from_line_failure(mmls_only: bool) -> Self {
        if mmls_only {
            Termination::MmlsFailure
        } else {
            Termination::StepTol
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State at one iterate, plus the step that led there (zeros for the
/// starting point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub step_size: f64,
    pub backtracks: usize,
    /// `<grad, dir>` at the previous iterate.
    pub slope: f64,
    pub wall_seconds: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// Sufficient-decrease constant the run used.
    pub delta: f64,
    pub cost_evals: usize,
    pub projections: usize,
    /// Error message when the run could not start.
    pub failure: Option<String>,
}

impl Trace {
    /// Accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,cost,grad_norm,step_size,backtracks,wall_seconds")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter, r.cost, r.grad_norm, r.step_size, r.backtracks, r.wall_seconds
            )?;
        }
        writeln!(out, "# terminated={}", self.termination)?;
        Ok(())
    }
}
