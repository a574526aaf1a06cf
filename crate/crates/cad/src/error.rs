use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;
use crate::featfile::FeatError;
use crate::model_io::ModelError;
use crate::pgm::PgmError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_LESION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CadError {
    #[error("{0}")]
    Usage(String),
    #[error("degenerate labels: training data holds only class {0}")]
    DegenerateLabels(u8),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] lesion_core::Error),
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(transparent)]
    Features(#[from] FeatError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CadError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CadError::Io { path: path.into(), source }
    }

    /// Unreadable or malformed input files map to the I/O code, bad
    /// parameters to the usage code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CadError::Core(lesion_core::Error::NoLesionRegion) => EXIT_NO_LESION,
            CadError::Usage(_) | CadError::DegenerateLabels(_) | CadError::Config(_) | CadError::Core(_) => EXIT_USAGE,
            CadError::Pgm(_) | CadError::Features(_) | CadError::Model(_) | CadError::Io { .. } => EXIT_IO,
        }
    }
}

pub type Result<T, E = CadError> = std::result::Result<T, E>;
