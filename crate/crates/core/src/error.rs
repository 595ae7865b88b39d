use thiserror::Error;

/// Errors raised by the cascade library.
#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The moment recursion is only valid strictly below the threshold chi(r).
    #[error("moment of order {h} diverges for r = {r} (order is at or above chi(r))")]
    MomentDivergence { r: u64, h: u32 },

    #[error("rate iteration did not converge after {levels} levels; unstable on [{lo}, {hi}]")]
    NonConvergence { levels: u32, lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CascadeError>;

impl CascadeError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        CascadeError::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CascadeError::Config(msg.into())
    }
}
