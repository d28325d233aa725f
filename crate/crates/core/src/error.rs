use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("min-gap constraint infeasible: round {round} exhausted {attempts} resamples")]
    GapInfeasible { round: usize, attempts: usize },

    #[error("true context of arm {arm} at round {round} has norm {norm} > 1")]
    NormBound { round: usize, arm: usize, norm: f64 },

    #[error("reward spread {spread} at round {round} exceeds 1")]
    SpreadBound { round: usize, spread: f64 },

    #[error("bernoulli mean {0} outside [0, 1]")]
    BernoulliMean(f64),

    #[error("confidence level delta = {0} must lie in (0, 1)")]
    InvalidDelta(f64),

    #[error("expected {expected} reports, got {got}")]
    ReportCount { expected: usize, got: usize },

    #[error("arm {arm} was not the arm selected this round")]
    NotSelected { arm: usize },

    #[error("oracle state space exceeds {limit} branches")]
    OracleTooLarge { limit: usize },

    #[error("oracle cannot handle this setting: {0}")]
    OracleUnsupported(String),

    #[error("log does not belong to this instance (log {log:016x}, instance {instance:016x})")]
    InstanceMismatch { log: u64, instance: u64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("job {job} failed: {source}")]
    Job {
        job: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Invalid {
        field: field.into(),
        message: message.into(),
    }
}
