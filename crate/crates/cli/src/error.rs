use std::path::PathBuf;

use hessian_lab::error::{AbpError, GeometryError, OperatorError};
use hessian_lab::{LabError, SolverError};
use thiserror::Error;

/// Everything that can stop a run before a report is produced.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Lab(#[from] LabError),
}

macro_rules! via_lab {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Lab(e.into())
            }
        }
    )*};
}

via_lab!(SolverError, GeometryError, OperatorError, AbpError);

/// Validation or usage error.
pub const EXIT_VALIDATION: i32 = 1;
/// Newton/continuity failure.
pub const EXIT_SOLVER: i32 = 2;
/// A measured estimate or certificate failed.
pub const EXIT_CHECK: i32 = 3;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(LabError::Solver(e)) => solver_code(e),
            CliError::Lab(LabError::BoundViolation { .. } | LabError::Schedule { .. }) => {
                EXIT_CHECK
            }
            _ => EXIT_VALIDATION,
        }
    }
}

fn solver_code(e: &SolverError) -> i32 {
    match e {
        SolverError::Geometry(_) | SolverError::InvalidProblem(_) | SolverError::Cone { .. } => {
            EXIT_VALIDATION
        }
        SolverError::Stagnation { .. }
        | SolverError::NonConvergence { .. }
        | SolverError::PathFailure { .. }
        | SolverError::PathBound { .. } => EXIT_SOLVER,
    }
}
