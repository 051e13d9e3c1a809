use thiserror::Error;

/// Errors raised by feature extraction, inference and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,

    #[error("need at least two categories")]
    TooFewCategories,

    #[error("duplicate category label {0:?}")]
    DuplicateLabel(String),

    #[error("code {code} at position {position} is outside the alphabet of size {size}")]
    InvalidCode {
        position: usize,
        code: usize,
        size: usize,
    },

    #[error("unknown symbol {symbol:?} at position {position}")]
    UnknownSymbol { symbol: String, position: usize },

    #[error("lag exceeds series length (lag {lag}, length {len})")]
    LagTooLarge { lag: usize, len: usize },

    #[error("measure undefined for one-point marginal")]
    OnePointMarginal,

    #[error("total correlation undefined: category {0} has a degenerate marginal")]
    TotalCorrelationUndefined(usize),

    #[error("degenerate numeric series")]
    DegenerateNumeric,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("alphabet mismatch for series {0}")]
    AlphabetMismatch(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular covariance matrix: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
