use thiserror::Error;

use crate::paths::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The moment system at this index is singular: the index is not normal.
    #[error("multi-index {index} is not normal ({which} system is singular)")]
    NotNormal { index: MultiIndex, which: &'static str },

    #[error("precision exhausted: {0}")]
    Precision(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An exact-rational computation produced an irrational value.
    #[error("value is not representable exactly: {0}")]
    Inexact(String),

    #[error("index {requested} out of bounds (available {available})")]
    Bounds { requested: usize, available: usize },

    #[error("invalid interval [{a}, {b}]: left endpoint must be smaller")]
    Interval { a: String, b: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("operator undefined: {0}")]
    Undefined(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code used by the command-line driver.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotNormal { .. } => "E_NOT_NORMAL",
            Error::Precision(_) => "E_PRECISION",
            Error::Domain(_) => "E_DOMAIN",
            Error::Inexact(_) => "E_INEXACT",
            Error::Bounds { .. } => "E_BOUNDS",
            Error::Interval { .. } => "E_INTERVAL",
            Error::Validation(_) => "E_VALIDATION",
            Error::Construction(_) => "E_CONSTRUCTION",
            Error::Inconsistent(_) => "E_INCONSISTENT",
            Error::Undefined(_) => "E_UNDEFINED",
            Error::Config(_) => "E_CONFIG",
            Error::Io(_) => "E_IO",
        }
    }
}
