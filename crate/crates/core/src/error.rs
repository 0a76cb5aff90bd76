use std::path::PathBuf;

use crate::corpus::Kind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file} line {line}: field `{field}`: {message}")]
    MalformedRecord {
        file: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("referential integrity violated: {}", .0.join("; "))]
    Integrity(Vec<String>),

    #[error("{what} `{id}` not found")]
    NotFound { what: &'static str, id: String },

    #[error("`{id}` is a {actual}, expected a {expected}")]
    WrongKind {
        id: String,
        expected: Kind,
        actual: Kind,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("shape mismatch: expected {expected} features, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),

    #[error("unsupported model format version {0}")]
    ModelFormat(u32),

    #[error("duplicate: {0}")]
    Duplicate(String),

    #[error("highlight capacity of {0} reached")]
    Capacity(usize),

    #[error("moderator `{moderator}` already upvoted `{target}`")]
    AlreadyVoted { moderator: String, target: String },

    #[error("unknown flair `{0}`")]
    InvalidFlair(String),

    #[error("`{0}` is not highlighted")]
    NotHighlighted(String),

    #[error("an explanation needs at least one reason")]
    EmptyReasons,

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("page {page} is out of range (1..={pages})")]
    PageOutOfRange { page: usize, pages: usize },

    #[error("invalid payload: {0}")]
    InvalidPayload(String),

    #[error("corrupt action log at record {position}: {message}")]
    CorruptLog { position: usize, message: String },

    #[error("unknown token `{token}` for {what}")]
    UnknownToken { what: &'static str, token: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn not_found(what: &'static str, id: impl Into<String>) -> Self {
        Error::NotFound {
            what,
            id: id.into(),
        }
    }

    /// Stable machine-readable code, used by the HTTP layer.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedRecord { .. } => "malformed_record",
            Error::Integrity(_) => "integrity",
            Error::NotFound { .. } => "not_found",
            Error::WrongKind { .. } => "wrong_kind",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Stratification(_) => "stratification",
            Error::DegenerateTraining(_) => "degenerate_training",
            Error::Shape { .. } => "shape",
            Error::UndefinedAuc(_) => "undefined_auc",
            Error::ModelFormat(_) => "model_format",
            Error::Duplicate(_) => "duplicate",
            Error::Capacity(_) => "capacity",
            Error::AlreadyVoted { .. } => "already_voted",
            Error::InvalidFlair(_) => "invalid_flair",
            Error::NotHighlighted(_) => "not_highlighted",
            Error::EmptyReasons => "empty_reasons",
            Error::InvalidQuery(_) => "invalid_query",
            Error::PageOutOfRange { .. } => "page_out_of_range",
            Error::InvalidPayload(_) => "invalid_payload",
            Error::CorruptLog { .. } => "corrupt_log",
            Error::UnknownToken { .. } => "unknown_token",
            Error::Json(_) => "json",
        }
    }
}
