use thiserror::Error;

use crate::ltlf::{CompileError, ParseError};
use crate::poss::{EvalError, ExprParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Expr(#[from] ExprParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("trace must contain at least one position")]
    EmptyTrace,
    #[error("set is empty")]
    EmptySet,
    #[error("state estimate became empty at t={time}; the trajectory left the observer region or the grid is too coarse (widen observer.region, refine observer.per_dim or widen the disturbance truncation)")]
    EmptyEstimate { time: usize },
    #[error("time {t} outside 0..={horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },
    #[error("formula uses a secret-set predicate but no secret region was given")]
    MissingSecret,
    #[error("environment policy chose w2={w2:?} at t={t}, outside the truncated disturbance support")]
    PolicyOutOfSupport { t: usize, w2: Vec<f64> },
    #[error("estimated memory {needed} bytes exceeds cap {cap} bytes; try resolution {suggested}")]
    MemoryCap { needed: usize, cap: usize, suggested: usize },
    #[error("enumeration size {count} exceeds cap {cap}")]
    Combinatorial { count: u128, cap: u128 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration-class errors map to a distinct CLI exit code.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Expr(_) | Error::Config(_) | Error::Dimension { .. } | Error::MissingSecret
        )
    }
}
