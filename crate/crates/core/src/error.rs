use thiserror::Error;

/// Errors surfaced by every relaylab operation.
///
/// Each variant maps onto a stable, machine-readable code (see [`Error::code`]) that the
/// gateway forwards verbatim to clients.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{entity} already exists: {key}")]
    Duplicate { entity: &'static str, key: String },

    #[error("{entity} not found: {key}")]
    NotFound { entity: &'static str, key: String },

    #[error("invalid state: {0}")]
    State(String),

    #[error("infeasible schedule: {requested} rounds requested, at most {max} possible for {participants} participants")]
    Infeasible {
        requested: usize,
        max: usize,
        participants: usize,
    },

    #[error("unknown or revoked token")]
    Auth,

    #[error("forbidden: {0}")]
    Forbidden(String),

    #[error("conversation {0} is closed")]
    Closed(String),

    #[error("message body has {len} code points, limit is {max}")]
    Size { len: usize, max: usize },

    #[error("referential integrity violated: {0}")]
    Integrity(String),

    #[error("storage failure: {0}")]
    Storage(#[from] rusqlite::Error),

    #[error("serialization failure: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "VALIDATION",
            Error::Duplicate { .. } => "DUPLICATE",
            Error::NotFound { .. } => "NOT_FOUND",
            Error::State(_) => "STATE",
            Error::Infeasible { .. } => "INFEASIBLE",
            Error::Auth => "AUTH",
            Error::Forbidden(_) => "FORBIDDEN",
            Error::Closed(_) => "CLOSED",
            Error::Size { .. } => "SIZE",
            Error::Integrity(_) => "INTEGRITY",
            Error::Storage(_) | Error::Serde(_) | Error::Io(_) => "INTERNAL",
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }

    pub(crate) fn not_found(entity: &'static str, key: impl Into<String>) -> Self {
        Error::NotFound {
            entity,
            key: key.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
