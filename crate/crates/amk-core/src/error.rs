//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum AmkError {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A band index that is not active in the partition was requested.
    #[error("band {0:?} is not active in this partition")]
    InactiveBand(Vec<i64>),

    /// The covering constant is too small: the bump sum dips below the
    /// positivity floor somewhere on the frequency window.
    #[error("covering constant too small: min bump sum {min:.3e} < {floor:.3e}")]
    CoveringTooSmall { min: f64, floor: f64 },

    /// A signal violates a spectral support precondition.
    #[error("spectrum support violation: leakage {leakage:.3e} outside {what}")]
    SupportViolation { what: String, leakage: f64 },

    /// The Gabor system is not a frame at the requested lattice density.
    #[error("not a frame at this density: min frame-operator eigenvalue {min_eig:.3e}")]
    NotAFrame { min_eig: f64 },

    /// A ratio against a zero denominator was requested.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON input.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AmkError>;
