use asc_jets::ExprError;
use thiserror::Error;

/// Failures surfaced by the command line front end.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("expression error at {path}: {source}")]
    Expression {
        path: String,
        #[source]
        source: ExprError,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid geometry: {0}")]
    Geometry(asc_core::Error),
    #[error("Newton projection did not converge after {iterations} iterations (|s| = {residual:e})")]
    ProjectionDiverged { iterations: usize, residual: f64 },
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema { path: path.into(), message: message.into() }
    }

    /// Process exit code for an error that aborts the whole run.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::ProjectionDiverged { .. } => ExitStatus::NumericError.code(),
            _ => ExitStatus::InputError.code(),
        }
    }
}

/// Outcome classes and their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Pass,
    ResidualFailure,
    InputError,
    NumericError,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::ResidualFailure => 1,
            Self::InputError => 2,
            Self::NumericError => 3,
        }
    }
}
