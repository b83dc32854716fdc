use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A level graph violates one of its structural invariants.
    #[error("invalid level graph ({invariant}): {detail}")]
    InvalidGraph { invariant: &'static str, detail: String },

    #[error("unknown state id `{0}`")]
    UnknownState(String),

    #[error("cannot build graph from corpus: {0}")]
    Corpus(String),

    #[error("segment graph generation failed: {0}")]
    Generation(String),

    #[error("level assembly failed: {0}")]
    Assembly(String),

    /// A caller broke an operation's precondition, e.g. a play result that
    /// visits a state without a player-reward sample.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }
}
