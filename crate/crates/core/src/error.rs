//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An operation was invoked in the wrong state (e.g. backward without a forward).
    #[error("invalid state: {0}")]
    State(String),

    /// A hyperparameter or argument is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    /// Input data violates a documented precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A metric is undefined for the given data.
    #[error("metric undefined: {0}")]
    Metric(String),

    /// A CSV or schema file could not be loaded.
    #[error("load error in {path}{location}: {reason}", location = fmt_location(*row, column.as_deref()))]
    Load {
        path: PathBuf,
        row: Option<usize>,
        column: Option<String>,
        reason: String,
    },

    /// Training produced a non-finite value.
    #[error("non-finite value during training: {0}")]
    NonFinite(Box<crate::preprocess::DiagnosticSnapshot>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_location(row: Option<usize>, column: Option<&str>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!(" (row {r}, column `{c}`)"),
        (Some(r), None) => format!(" (row {r})"),
        (None, Some(c)) => format!(" (column `{c}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
