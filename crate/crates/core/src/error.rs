//! Crate-wide error type.

use crate::greedy::GreedyDiagnostics;
use crate::lds::ActuatorSchedule;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// The minimum-energy problem has no exact solution because the scheduled
    /// Gramian is rank-deficient. Carries the residual of the least-squares
    /// fallback so callers can judge how far the target is from reachable.
    #[error(
        "target unreachable under schedule: Gramian rank {rank} < {n}, \
         least-squares residual {residual:.6e}"
    )]
    TargetUnreachable { rank: usize, n: usize, residual: f64 },

    /// The outer greedy loop exhausted its iteration budget without reaching a
    /// full-rank Gramian. The best schedule found is still returned so callers
    /// can inspect or persist it.
    #[error("scheduler stopped at rank {best_rank} < {n} after {outer_iterations} outer iterations")]
    RankDeficientSchedule {
        best_rank: usize,
        n: usize,
        outer_iterations: usize,
        schedule: Box<ActuatorSchedule>,
        diagnostics: Box<GreedyDiagnostics>,
    },

    #[error("enumeration of {total} schedules exceeds the guard of {guard}")]
    EnumerationTooLarge { total: u128, guard: u64 },

    #[error("no full-rank schedule exists at horizon {horizon} with sparsity {s}")]
    NotSparseControllableAtHorizon { horizon: usize, s: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
