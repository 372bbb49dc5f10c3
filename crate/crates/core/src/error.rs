use alloc::string::String;

/// Error type shared by all core modules.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("training error: {0}")]
    Training(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl core::fmt::Display) -> Self {
        Error::InvalidArgument(alloc::format!("{msg}"))
    }

    pub fn contract(msg: impl core::fmt::Display) -> Self {
        Error::ContractViolation(alloc::format!("{msg}"))
    }

    pub fn config(msg: impl core::fmt::Display) -> Self {
        Error::Configuration(alloc::format!("{msg}"))
    }

    pub fn training(msg: impl core::fmt::Display) -> Self {
        Error::Training(alloc::format!("{msg}"))
    }
}
