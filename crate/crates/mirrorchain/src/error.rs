//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "chain is not a perfect state transfer chain: worst mirror deviation {deviation:.3e} \
         at site {site} (tolerance {tol:.3e})"
    )]
    NotPst { site: usize, deviation: f64, tol: f64 },

    #[error("dense oracle capped at {max} sites, got {requested}")]
    ResourceLimit { requested: usize, max: usize },

    #[error("unsupported error model: {0}")]
    Unsupported(String),

    #[error(
        "encoding region D = {d} is insufficient (null space dimension {nullity}, need {needed}); \
         try D = {}", d + 1
    )]
    InsufficientRegion { d: usize, nullity: usize, needed: usize },

    #[error("encoding pair is inconsistent: {0}")]
    InconsistentPair(String),

    #[error("decoder construction failed: {0}")]
    DecoderConstruction(String),

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
