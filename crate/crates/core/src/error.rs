use thiserror::Error;

pub type Result<T, E = GlnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GlnError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid adjacency: {0}")]
    InvalidAdjacency(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("training diverged at epoch {epoch}, sample {sample}: loss is {loss}")]
    Diverged { epoch: usize, sample: usize, loss: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
