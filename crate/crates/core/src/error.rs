use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid model config: {0}")]
    Config(String),

    #[error("unreadable checkpoint archive {path}: {reason}")]
    Archive { path: PathBuf, reason: String },

    #[error("checkpoint is missing tensor `{0}`")]
    MissingTensor(String),

    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("tensor `{name}` has unsupported dtype {dtype}")]
    UnsupportedDtype { name: String, dtype: String },

    #[error("empty token sequence")]
    EmptyInput,

    #[error("sequence of {len} tokens exceeds max context {max}")]
    InputTooLong { len: usize, max: usize },

    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    #[error("position {position} out of range for {n_tokens} tokens")]
    PositionOutOfRange { position: usize, n_tokens: usize },

    #[error("head ({layer}, {head}) out of range for {n_layers} layers x {n_heads} heads")]
    HeadOutOfRange {
        layer: usize,
        head: usize,
        n_layers: usize,
        n_heads: usize,
    },

    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    #[error("byte range {start}..{end} outside text of {len} bytes")]
    RangeOutsideText { start: usize, end: usize, len: usize },

    #[error("invalid region: {0}")]
    Region(String),

    #[error("no instances of relation `{0}` in corpus")]
    RelationAbsent(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("stimulus set `{set_id}` is not a complete factorial design: {reason}")]
    IncompleteSet { set_id: String, reason: String },

    #[error("item `{item_id}`: {reason}")]
    Item { item_id: String, reason: String },

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("unpaired condition in set `{0}`")]
    Unpaired(String),

    #[error("sentence is grammatical (subject and verb both {0}); expected a number mismatch")]
    NotUngrammatical(String),

    #[error("csv output error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
