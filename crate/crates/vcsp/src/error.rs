use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed rational literal: {0:?}")]
    MalformedRational(String),
    #[error("zero denominator in rational literal: {0:?}")]
    ZeroDenominator(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("arity mismatch for symbol {symbol}: expected {expected}, got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown element: {0:?}")]
    UnknownElement(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("structure is not a core")]
    NotACore,
    #[error("not a probability distribution: {0}")]
    NotADistribution(String),
    #[error("not a tree decomposition: {0}")]
    NotADecomposition(String),
    #[error("no tightening witness: relaxation optimum is not attained by any assignment found")]
    NoTighteningWitness,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
