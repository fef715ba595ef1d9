use attentive_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INPUT: u8 = 2;
    pub const RESOURCE: u8 = 3;
    pub const IO: u8 = 4;
    pub const INTERNAL: u8 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl AppError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) | AppError::Parse(_) | AppError::Invalid(_) => exit::INPUT,
            AppError::Core(CoreError::Input(_)) => exit::INPUT,
            AppError::Core(CoreError::Resource { .. }) => exit::RESOURCE,
            AppError::Io { .. } => exit::IO,
            AppError::Core(CoreError::Consistency(_)) | AppError::Internal(_) => exit::INTERNAL,
        }
    }
}
