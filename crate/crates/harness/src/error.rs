use std::path::Path;

/// Failure classes of the command-line tool, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal fault: {0}")]
    Internal(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Data(_) => 2,
            HarnessError::Internal(_) => 3,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        HarnessError::Data(msg.into())
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        HarnessError::Data(format!("{}: {err}", path.display()))
    }

    /// JSON parse failure, with the line and column serde reports.
    pub fn json(path: &Path, err: serde_json::Error) -> Self {
        HarnessError::Data(format!(
            "{}: line {} column {}: {err}",
            path.display(),
            err.line(),
            err.column()
        ))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
