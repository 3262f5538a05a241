use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Bad flags, plan files or method names. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}:{line}: {message}", path.display())]
    Input { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] plis_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Failed(String),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
