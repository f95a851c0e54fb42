use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("invalid dissimilarity matrix: {0}")]
    InvalidDissimilarity(String),

    #[error("point {index} lies outside the manifold domain")]
    OutsideDomain { index: usize },

    #[error("unsupported manifold kind for this operation: {0}")]
    Unsupported(&'static str),

    #[error("stress weights disconnect the configuration into {components} components")]
    DisconnectedWeights { components: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch { expected: expected.to_string(), got: got.to_string() }
    }
}
