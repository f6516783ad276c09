use thiserror::Error;

/// Errors raised by the inference, bound and allocation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("arm {arm} out of range for a {k}-armed model")]
    ArmOutOfRange { arm: usize, k: usize },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("prior variances are not homogeneous ({0:e} apart)")]
    HeterogeneousVariance(f64),

    #[error("objective is not finite at the starting allocation")]
    NonFiniteObjective,

    #[error("arm vectors span a space of rank {rank} < {dim}")]
    RankDeficient { rank: usize, dim: usize },

    #[error("budget {budget} is too small (needs at least {required})")]
    BudgetTooSmall { budget: u64, required: u64 },

    #[error("prior mean of arm {arm} is not positive")]
    NonPositiveMean { arm: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Errors caused by the inputs rather than by the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::DimMismatch { .. }
                | Error::InvalidPrior(_)
                | Error::InvalidArgument(_)
                | Error::HeterogeneousVariance(_)
                | Error::RankDeficient { .. }
                | Error::BudgetTooSmall { .. }
                | Error::NonPositiveMean { .. }
                | Error::Unsupported(_)
                | Error::NotPositiveDefinite { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
