//! Error classification for the command-line tool.
//!
//! Every failure is either a *validation* error (bad flags, unreadable or
//! invalid configuration, unknown preset/suite names — exit code 1) or a
//! *runtime* error (failures while simulating or writing results — exit
//! code 2).

use minislot_core::Error as CoreError;

/// Failure with its process exit code baked in.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// The request itself was malformed; nothing was run. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// The request was valid but running or emitting results failed.
    /// Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl AppError {
    pub fn validation(msg: impl Into<String>) -> Self {
        AppError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        AppError::Runtime(msg.into())
    }

    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Runtime(_) => 2,
        }
    }
}

/// Core errors surfacing after input validation are runtime failures.
impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
