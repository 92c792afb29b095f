use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("power pool must contain at least one level")]
    EmptyPool,

    #[error("signal of device {device} was already subtracted along this lineage")]
    DoubleSubtraction { device: u32 },

    #[error("instance too large for exhaustive enumeration: {what} = {size} exceeds {limit}")]
    OracleTooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("bound precondition violated: {0}")]
    BoundPrecondition(String),

    #[error("cannot plot: {0}")]
    Plot(String),

    #[error("malformed results file: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
