use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zeta({0}) diverges; need n >= 2")]
    ZetaDomain(i64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector {0:?} is not primitive")]
    NotPrimitive(Vec<i64>),
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(i128),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("gcd condition violated: {0}")]
    NotCoprime(String),
    #[error("enumeration needs {points:.3e} box points, budget is {budget:.3e}")]
    BudgetExceeded { points: f64, budget: f64 },
    #[error("need at least {needed} entries, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("shift is not rational")]
    IrrationalShift,
    #[error("rejection sampler gave up after {0} attempts")]
    RejectionExhausted(usize),
    #[error("precision lost at q = {q}: improvement {improvement:.3e} below error bound {bound:.3e}")]
    Precision { q: u64, improvement: f64, bound: f64 },
    #[error("unbounded region")]
    UnboundedRegion,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
