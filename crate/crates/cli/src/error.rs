use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bundle is inconsistent: {0}")]
    Bundle(String),
    #[error("expected reward {observed} at round {round} exceeds oracle optimum {y_star}")]
    Oracle { round: usize, observed: f64, y_star: f64 },
    #[error(transparent)]
    Engine(#[from] excbo::Error),
}

impl RunnerError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        RunnerError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Parse(_) | RunnerError::Validation(_) => 2,
            RunnerError::Engine(excbo::Error::Config(_)) => 2,
            RunnerError::Io { .. } | RunnerError::Bundle(_) => 4,
            RunnerError::Oracle { .. } | RunnerError::Engine(_) => 3,
        }
    }
}

pub type Result<T, E = RunnerError> = std::result::Result<T, E>;
