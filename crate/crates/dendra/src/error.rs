use thiserror::Error;

/// Errors produced while ingesting proximity data, validating method
/// configurations, or decoding serialized dendrograms.
#[derive(Debug, Error)]
pub enum Error {
    /// The input text could not be parsed in the declared format.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// The parsed values do not form a valid proximity matrix.
    #[error("invalid matrix: {0}")]
    Matrix(String),

    /// The method specification is malformed or inadmissible for the data.
    #[error("invalid method: {0}")]
    Method(String),

    /// A serialized dendrogram could not be decoded.
    #[error("invalid serialized dendrogram: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
