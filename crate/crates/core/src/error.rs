use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The chain description is not a valid finite-state Markov model.
    #[error("malformed model: {}", .0.join("; "))]
    Malformed(Vec<String>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Observables have zero variance where a positive one is needed.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// The Doeblin constant gamma is zero, every characteristic-function bound is vacuous.
    #[error("Doeblin condition fails (gamma = 0): {0}")]
    DoeblinFails(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
