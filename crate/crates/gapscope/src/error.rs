use std::path::PathBuf;

use gapscope_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    /// A scaling claim failed numerically.
    #[error("theorem violation: {0}")]
    Theorem(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 1 usage, 2 numerical failure, 3 theorem violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                CoreError::NotConverged { .. }
                | CoreError::IllConditioned(_)
                | CoreError::VerificationFailed(_)
                | CoreError::WindowUnavailable(_) => 2,
                _ => 1,
            },
            CliError::Csv(_) => 2,
            CliError::Theorem(_) => 3,
            CliError::Usage(_) | CliError::Io { .. } | CliError::Json { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(_) if self.exit_code() == 2 => "numerical",
            CliError::Core(_) => "invalid-input",
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Csv(_) => "csv",
            CliError::Theorem(_) => "theorem-violation",
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
