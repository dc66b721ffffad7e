use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid letter {found:?} at offset {offset} (expected '0' or '1')")]
    InvalidLetter { offset: usize, found: char },

    #[error("index {index} out of range for word of length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("operation requires a non-empty word")]
    EmptyWord,

    #[error("malformed code: entry {entry} references predecessor {pred}")]
    MalformedCode { entry: usize, pred: usize },

    #[error("malformed packed word: {0}")]
    MalformedPacked(String),

    #[error("no de Bruijn sequence of order {k} starts with {prefix}")]
    ImpossiblePrefix { k: u32, prefix: String },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("sampling failed after {attempts} attempts ({detail})")]
    Sampling { attempts: u32, detail: String },

    #[error("construction anomaly: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
