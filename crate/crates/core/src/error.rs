use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input is not valid UTF-8: {0}")]
    Encoding(#[from] std::str::Utf8Error),

    #[error("cue {index} starts at {start} before the previous cue start {previous}")]
    StartRegression {
        index: u32,
        start: String,
        previous: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero-norm vector: {0}")]
    ZeroVector(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown scalar function `{0}` (expected identity or scaled)")]
    UnknownScoreFn(String),

    #[error("invalid modality: {0}")]
    Modality(String),

    #[error("duplicate record ({documentary}, {position})")]
    DuplicateRecord { documentary: String, position: u32 },

    #[error("documentary `{0}` appears in both corpora")]
    TitleCollision(String),

    #[error("unscored pair ({documentary}, {position})")]
    Unscored { documentary: String, position: u32 },

    #[error("unknown topic `{0}`")]
    UnknownTopic(String),

    #[error("anchor ({documentary}, {position}) not in manifest")]
    UnknownAnchor { documentary: String, position: u32 },

    #[error("requested {requested} out-of-domain records but only {available} are available")]
    InsufficientRecords { requested: usize, available: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),

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
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
