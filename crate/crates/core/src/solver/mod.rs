//! Backend-agnostic LP/MILP layer.
//!
//! Models are built once with [`Model`] and handed to any [`MilpBackend`].
//! The bundled backend ([`MicroLpBackend`]) runs a single-threaded dual
//! simplex with branch-and-bound over the binaries, which is plenty for the
//! desk-scale instances the oracles work on.

mod backend;
mod model;

use std::time::Duration;

use thiserror::Error;

pub use backend::MicroLpBackend;
pub use model::{Cmp, Constraint, Model, Sense, VarId, VarKind, Variable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("backend failure: {0}")]
    Backend(String),
    /// The backend claims a solution that violates the model.
    #[error("backend returned an invalid point (violation {0:e})")]
    InvalidPoint(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    /// An incumbent without a proof of optimality (node limit or gap stop).
    Feasible,
    Infeasible,
    Unbounded,
    /// The time limit expired; the incumbent is attached when one exists.
    TimeLimit,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::TimeLimit => "time_limit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SolveParams {
    pub time_limit: Option<Duration>,
    /// Absolute optimality gap.
    pub gap_tol: f64,
    /// A full assignment used to seed the incumbent; ignored when infeasible.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            time_limit: None,
            gap_tol: 1e-6,
            warm_start: None,
        }
    }
}

impl SolveParams {
    pub fn with_time_limit(mut self, limit: Option<Duration>) -> Self {
        self.time_limit = limit;
        self
    }

    pub fn with_warm_start(mut self, values: Vec<f64>) -> Self {
        self.warm_start = Some(values);
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: Status,
    /// Primal values indexed by [`VarId::index`]; `None` without an incumbent.
    pub primal: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Best proven bound on the objective (in the model's sense).
    pub best_bound: f64,
}

impl SolveOutcome {
    pub fn value(&self, var: VarId) -> Option<f64> {
        self.primal.as_ref().map(|p| p[var.0])
    }

    pub fn has_solution(&self) -> bool {
        self.primal.is_some()
    }

    fn without_solution(status: Status, best_bound: f64) -> Self {
        SolveOutcome {
            status,
            primal: None,
            objective: None,
            best_bound,
        }
    }
}

/// A solver able to take a [`Model`] to a [`SolveOutcome`].
pub trait MilpBackend: Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, model: &Model, params: &SolveParams) -> Result<SolveOutcome, SolverError>;
}

/// Solves with the bundled backend.
pub fn solve(model: &Model, params: &SolveParams) -> Result<SolveOutcome, SolverError> {
    MicroLpBackend.solve(model, params)
}
