use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} does not split in Z[i]")]
    NotSplit(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("Fourier cutoff {cutoff} too small, need at least {needed}")]
    CutoffTooSmall { cutoff: i64, needed: i64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("r = {0} is out of range for exhaustive enumeration")]
    InfeasibleR(usize),
    #[error("ambient dimension {0} exceeds the enumeration limit")]
    InfeasibleN(usize),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("exact enumeration infeasible: {0}")]
    InfeasibleExact(String),
    #[error("matrix is rank deficient (rank {rank}, expected {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("family is empty")]
    EmptyFamily,
    #[error("k = 0 is a pole of L(s, 0)")]
    ZeroK,
    #[error("invalid radius: {0}")]
    InvalidRadius(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors that reject a request as too expensive to run.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleR(_)
                | Error::InfeasibleN(_)
                | Error::TooLarge(_)
                | Error::InfeasibleExact(_)
        )
    }

    /// True for numerical precision failures.
    pub fn is_precision(&self) -> bool {
        matches!(self, Error::PrecisionInsufficient(_) | Error::CutoffTooSmall { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
