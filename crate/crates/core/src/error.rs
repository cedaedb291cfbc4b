use thiserror::Error;

/// Errors surfaced by market validation, decomposition and metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("capacity mismatch: total capacity {capacity} != {agents} agents")]
    CapacityMismatch { capacity: usize, agents: usize },

    #[error("non-finite entry in input matrix")]
    NonFinite,

    #[error("empty market: agents, objects and features must all be >= 1")]
    EmptyMarket,

    #[error("decomposition did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("degenerate spectrum: leading singular value is zero")]
    DegenerateSpectrum,

    #[error("all-zero spectrum")]
    AllZeroSpectrum,

    #[error("empty sample")]
    EmptySample,

    #[error("rank correlation undefined: at least one score vector is constant")]
    DegenerateAllTies,

    #[error("instance too large to enumerate: {count} allocations exceed budget {budget}")]
    TooLarge { count: u128, budget: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
