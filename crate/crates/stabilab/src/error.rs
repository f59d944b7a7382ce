use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] stabilab_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 1 when the error itself is a property violation of the protocol,
    /// 2 for usage, input and resource errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(stabilab_core::Error::ContractViolation { .. } | stabilab_core::Error::Ambiguity { .. }) => 1,
            _ => 2,
        }
    }
}
