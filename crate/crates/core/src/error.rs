use thiserror::Error;

use crate::payoffs::PayoffKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("up-probability {value} at step {step} is outside (0, 1)")]
    ProbabilityOutOfRange { step: usize, value: f64 },

    #[error("expected {expected} per-step probabilities, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("worker count {workers} must satisfy 1 <= M <= 2^{depth}")]
    InvalidWorkerCount { workers: u64, depth: u32 },

    #[error("worker count {0} must be a power of two")]
    NotPowerOfTwo(u64),

    #[error("rank {rank} out of range for {workers} workers")]
    RankOutOfRange { rank: u64, workers: u64 },

    #[error("leaf formula requires a path-independent payoff, got {0}")]
    PathDependentPayoff(PayoffKind),

    #[error("leaf formula requires constant per-step probabilities")]
    NonConstantProbs,

    #[error("cannot allocate {samples} draws over {strata} positive-probability strata")]
    InfeasibleAllocation { samples: u64, strata: u64 },

    #[error("sample size {0} too small (need at least {1})")]
    SampleSizeTooSmall(u64, u64),

    #[error("enumerating 2^{0} paths requires an explicit large-run override")]
    EnumerationTooLarge(u32),
}
