use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document: {0}")]
    Malformed(String),

    /// A field failed validation. `location` is a dotted field path such as
    /// `sample s1.qa_items[0]`.
    #[error("{message} at {location}")]
    Invalid { location: String, message: String },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("zero-norm embedding at {0}")]
    ZeroNorm(String),

    #[error("invalid token layout: {0}")]
    Layout(String),

    #[error("cost matrix too large for enumeration: min(rows, cols) = {0} > 8")]
    TooLarge(usize),

    #[error("value {value} outside [0, 1] for {what}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("{0}")]
    Precondition(String),

    #[error("infeasible quotas: {}", format_deficits(.0))]
    Infeasible(Vec<Deficit>),
}

/// A bucket whose quota exceeds its available supply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deficit {
    pub bucket: String,
    pub quota: usize,
    pub available: usize,
}

fn format_deficits(deficits: &[Deficit]) -> String {
    deficits
        .iter()
        .map(|d| format!("{} needs {} but has {}", d.bucket, d.quota, d.available))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line front end: 2 for I/O failures,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }

    /// Prefix the error location with extra context (e.g. a sample id).
    pub fn within(self, context: &str) -> Self {
        match self {
            Error::Invalid { location, message } => Error::Invalid {
                location: format!("{context}.{location}"),
                message,
            },
            Error::Io { .. } | Error::Infeasible(_) => self,
            other => Error::Invalid {
                location: context.to_string(),
                message: other.to_string(),
            },
        }
    }
}
