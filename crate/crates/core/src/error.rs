use thiserror::Error;

pub type Result<T, E = AsaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AsaError {
    /// An argument fell outside the domain of a density, schedule or acceptance function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("parameter `{name}` has lower bound {lower} above upper bound {upper}")]
    ParameterRange { name: String, lower: f64, upper: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("initial point is infeasible: {0}")]
    InfeasibleStart(String),

    #[error("initial cost is not finite ({0})")]
    NonFiniteInitialCost(f64),

    #[error("cost function failed after {generated} generated states: {message}")]
    Cost { generated: u64, message: String },

    #[error("unknown problem `{name}`; available: {}", available.join(", "))]
    UnknownProblem { name: String, available: Vec<String> },

    #[error("unknown algorithm `{0}`; expected one of asa, ba, fa")]
    UnknownAlgorithm(String),

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("configuration parse error: {0}")]
    Parse(String),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AsaError {
    /// True for errors caused by bad user input rather than a failure during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            AsaError::InvalidProblem(_)
                | AsaError::ParameterRange { .. }
                | AsaError::InvalidConfig(_)
                | AsaError::UnknownProblem { .. }
                | AsaError::UnknownAlgorithm(_)
                | AsaError::Parse(_)
                | AsaError::InfeasibleStart(_)
        )
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> AsaError {
    AsaError::Domain(msg.into())
}
