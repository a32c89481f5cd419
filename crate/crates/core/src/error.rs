use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least {min}, got {got}")]
    Dimension { min: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input in `{0}`")]
    NonFinite(&'static str),

    #[error("net too large to enumerate: cardinality bound {bound:.6e} exceeds budget {budget}")]
    TooLargeToEnumerate { bound: f64, budget: u64 },

    #[error("point and net parameters disagree")]
    ParamsMismatch,

    #[error("outside the admissible regime: {0}")]
    OutsideRegime(String),

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
