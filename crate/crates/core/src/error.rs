use thiserror::Error;

pub type Result<T, E = MarketError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("{field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("need at least {min} participants, got {got}")]
    TooFewParticipants { got: usize, min: usize },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },

    #[error("sum of price sensitivities is degenerate ({0})")]
    DegenerateSensitivity(f64),

    #[error("{with_override} of {n} prosumers carry a_i; use all or none")]
    MixedSensitivityModes { with_override: usize, n: usize },

    #[error("scenario must be {expected}")]
    WrongMode { expected: &'static str },

    #[error("KKT system is singular or not positive definite: {0}")]
    InfeasibleParameters(String),

    #[error("no convergence after {iterations} rounds (last price residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

impl MarketError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        MarketError::InvalidParameter { field: field.into(), reason: reason.into() }
    }

    /// Prefixes the field path of an `InvalidParameter` with `list[index].`.
    pub(crate) fn at_index(self, list: &str, index: usize) -> Self {
        match self {
            MarketError::InvalidParameter { field, reason } => {
                MarketError::InvalidParameter { field: format!("{list}[{index}].{field}"), reason }
            }
            other => other,
        }
    }
}
