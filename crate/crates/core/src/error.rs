use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum SgfemError {
    #[error("recurrence breakdown at degree {degree}: beta = {beta:e} (orthogonality lost)")]
    RecurrenceBreakdown { degree: usize, beta: f64 },

    #[error("requested degree {requested} exceeds basis capacity {capacity}")]
    DegreeOutOfRange { requested: usize, capacity: usize },

    #[error("eigen-decomposition of Jacobi matrix failed")]
    EigenFailure,

    #[error("KL root bracketing failed for mode {mode} ({parity})")]
    RootBracketing { mode: usize, parity: &'static str },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("iterative solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("index set must contain the zero multi-index")]
    MissingZeroIndex,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "effectivity denominator is non-positive ({0:e}); reference solution is not richer than the approximation"
    )]
    NonPositiveDenominator(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SgfemError> = std::result::Result<T, E>;
