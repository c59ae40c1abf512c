use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The network configuration or a parameter set is not usable.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called outside its domain (bad lengths, unknown edge, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A file did not follow the expected binary layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
