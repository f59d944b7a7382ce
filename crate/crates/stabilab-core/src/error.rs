use alloc::string::String;
use alloc::vec::Vec;

use crate::system::{ActionId, ProcessId};

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("guard of action {action} is false at process {process}")]
    ContractViolation { process: ProcessId, action: ActionId },

    #[error("process {process} has several enabled actions {actions:?}")]
    Ambiguity { process: ProcessId, actions: Vec<ActionId> },

    #[error("{what}: {count} exceeds the limit of {limit}")]
    ResourceLimit { what: &'static str, count: u128, limit: u128 },

    #[error("script entry at step {step} selects no enabled process")]
    ScriptStall { step: u64 },

    #[error("invalid lasso at step {step}: {reason}")]
    InvalidLasso { step: usize, reason: String },

    #[error("undefined: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn topology(msg: impl Into<String>) -> Self {
        Error::InvalidTopology(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
