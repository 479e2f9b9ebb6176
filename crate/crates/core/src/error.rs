use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("measures live on different domains")]
    DomainMismatch,
    #[error("exponent p must satisfy 1 < p < inf, got {0}")]
    InvalidExponent(f64),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("quantile level {0} outside [0, 1]")]
    QuantileOutOfRange(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("kappa = {0} admits only the uniform state")]
    NoNontrivialSolution(f64),
    #[error("support overflow: {0}")]
    SupportOverflow(String),
    #[error("configuration is not stationary: {0}")]
    NotStationary(String),
    #[error("empty equilibrium set")]
    EmptySet,
    #[error("numerical abort at step {step} (t = {time}): {reason}")]
    NumericalAbort { step: usize, time: f64, reason: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("scenario {id}: {source}")]
    Scenario {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalAbort { .. } | Error::SupportOverflow(_) => 3,
            Error::Scenario { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
