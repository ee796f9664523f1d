use std::io;
use std::path::PathBuf;

use mfg_core::{MeshError, SolveError};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("mesh could not be built")]
    Mesh(#[source] MeshError),
    #[error("solver failed in variant `{variant}`")]
    Solve {
        variant: String,
        #[source]
        source: SolveError,
    },
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl AppError {
    /// Process exit status: 1 validation, 2 solver failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Invalid(_) => 1,
            AppError::Mesh(MeshError::Io { .. }) => 3,
            AppError::Mesh(_) => 1,
            AppError::Solve { source, .. } => match source {
                SolveError::Spec(_) | SolveError::Options(_) => 1,
                _ => 2,
            },
            AppError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> AppError {
        let path = path.into();
        move |source| AppError::Io { path, source }
    }
}

impl From<MeshError> for AppError {
    fn from(e: MeshError) -> Self {
        AppError::Mesh(e)
    }
}
