//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown dop value {dop}; configured dop values are {allowed:?}")]
    UnknownDop { dop: u32, allowed: Vec<u32> },

    #[error("unknown query {0:?}")]
    UnknownQuery(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset: {0}")]
    InvalidDataset(String),

    #[error("query {query:?}: missing entry for theta id {theta_id}")]
    MissingEntry { query: String, theta_id: u32 },

    #[error("query {query:?}: duplicate entry for theta id {theta_id}")]
    DuplicateEntry { query: String, theta_id: u32 },

    #[error("operator order mismatch: expected {expected:?}, found {found:?}")]
    OperatorOrderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("query {query:?}, theta id {theta_id}: {detail}")]
    InvalidEntry {
        query: String,
        theta_id: u32,
        detail: String,
    },

    #[error("duplicate query name {0:?}")]
    DuplicateQuery(String),

    #[error("ingest: {0}")]
    UniverseMismatch(String),

    #[error("unknown vertex id {0}")]
    UnknownVertex(u64),

    #[error("storage: {0}")]
    InvalidStorage(String),

    #[error("workload has {actual} queries but at least {needed} are required")]
    WorkloadTooSmall { needed: usize, actual: usize },

    #[error("no hintset choice supplied for query {0:?}")]
    MissingChoice(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs or configuration (exit code 1 in
    /// the CLI), false for runtime failures (exit code 2).
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
