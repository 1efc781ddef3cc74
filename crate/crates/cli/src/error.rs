use std::process::ExitCode;

use thiserror::Error;

/// Failures that end a command, each with a fixed exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, or an output that cannot be written.
    #[error("{0}")]
    Input(String),
    /// The instance or schedule is valid input but the answer is negative.
    #[error("{0}")]
    Negative(String),
    #[error("insufficient budget: at least {required} is needed, {available} is available")]
    InsufficientBudget { required: f64, available: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Negative(_) => 1,
            CliError::Input(_) => 2,
            CliError::InsufficientBudget { .. } => 3,
        })
    }
}

impl From<twosided_core::Error> for CliError {
    fn from(e: twosided_core::Error) -> Self {
        use twosided_core::Error as E;
        match e {
            E::InsufficientBudget { required, available } => CliError::InsufficientBudget { required, available },
            E::Infeasible(_) | E::OracleInfeasible(_) | E::OracleNoConvergence { .. } => CliError::Negative(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}
