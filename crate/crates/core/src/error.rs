use thiserror::Error;

use crate::domain::{Timestamp, VendorId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("clock went backwards: now {now} is before interval start {opened_at}")]
    Clock {
        now: Timestamp,
        opened_at: Timestamp,
    },

    #[error("vendor {0} is not configured in this routing group")]
    UnknownVendor(VendorId),

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("storage failure: {0}")]
    Storage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
