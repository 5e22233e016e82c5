use energy_sharing::MarketError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("solver error: {0}")]
    Solver(MarketError),
    #[error("did not converge: {0}")]
    Convergence(MarketError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Solver(_) => 3,
            CliError::Convergence(_) => 4,
        }
    }

    /// For errors raised while checking the input itself.
    pub fn input(e: MarketError) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        match e {
            MarketError::NonConvergence { .. } => CliError::Convergence(e),
            MarketError::InvalidParameter { .. }
            | MarketError::TooFewParticipants { .. }
            | MarketError::LengthMismatch { .. }
            | MarketError::MixedSensitivityModes { .. } => CliError::input(e),
            other => CliError::Solver(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
