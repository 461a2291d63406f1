use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("omega window [{have_lo}, {have_hi}) does not cover required range [{need_lo}, {need_hi})")]
    WindowTooShort {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate target set: {0}")]
    DegenerateTarget(String),

    #[error("rectangles overlap")]
    OverlappingRectangles,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
