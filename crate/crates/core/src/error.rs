use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure reported by an embedding or completion provider.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{provider}: {message}{}", if *.retriable { " (retriable)" } else { "" })]
pub struct ProviderError {
    pub provider: String,
    pub message: String,
    /// Transport-level failures (connection refused, timeouts, 5xx) may succeed on retry.
    pub retriable: bool,
}

impl ProviderError {
    pub fn transport(provider: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            provider: provider.into(),
            message: message.into(),
            retriable: true,
        }
    }

    pub fn invalid_response(provider: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            provider: provider.into(),
            message: message.into(),
            retriable: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: malformed record: {message}", path.display())]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate card id `{0}`")]
    DuplicateCard(String),

    #[error("duplicate table id `{0}`")]
    DuplicateTable(String),

    #[error("table `{table}`: row {row} has {found} cells but there are {expected} headers")]
    RaggedRow {
        table: String,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("table `{table}`: {reason}")]
    InvalidTable { table: String, reason: String },

    #[error("card `{card}`: {reason}")]
    InvalidCard { card: String, reason: String },

    #[error("unknown card `{0}`")]
    UnknownCard(String),

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error(transparent)]
    Provider(#[from] ProviderError),

    #[error("no card in the ranking has an associated table")]
    AnchorNotFound,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("table `{0}` has a single column, nothing to pivot")]
    SingleColumnTranspose(String),

    #[error("card `{0}` has no entry in the nugget store")]
    MissingNuggets(String),

    #[error("nuggets for card `{0}` are already stored")]
    NuggetsAlreadyStored(String),

    #[error("query `{0}` yields no nugget constraint")]
    EmptyQuery(String),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
