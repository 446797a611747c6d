use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvlError {
    #[error("invalid process specification: {0}")]
    InvalidProcess(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("observable does not fit process: {0}")]
    Mismatch(String),

    #[error("no valid level: tau/n = {ratio} exceeds 1")]
    NoValidLevel { ratio: f64 },

    #[error("index out of range: need {needed} values, series has {len}")]
    OutOfRange { needed: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("estimate undefined: {0}")]
    Undefined(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("rejection sampling exceeded {attempts} attempts")]
    RejectionCap { attempts: u64 },

    #[error("word {0} is not periodic")]
    NotPeriodic(String),
}

pub type Result<T> = std::result::Result<T, EvlError>;
