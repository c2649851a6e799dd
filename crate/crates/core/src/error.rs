//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by rate computations, searches, and spec loading.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input value is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// No finite quantization distortion satisfies the Wyner-Ziv equality.
    #[error("infeasible quantization: index rate {index_rate} admits no finite distortion")]
    InfeasibleQuantization { index_rate: f64 },

    /// A caller violated an API contract (mismatched lengths, invalid sets).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Grid search would exceed the evaluation guard.
    #[error(
        "grid search refused: {points} points/dim over {free_dims} free dimensions \
         is {total} evaluations per subset (limit 1e7)"
    )]
    GridTooLarge {
        points: usize,
        free_dims: usize,
        total: f64,
    },

    /// A discrete-memoryless network spec failed validation.
    #[error("invalid DM network spec: {0}")]
    DmSpec(String),

    /// The quantizer family is not strictly decreasing in its knob.
    #[error("quantizer family for {node} is not strictly decreasing in d: {detail}")]
    NonMonotoneQuantizer { node: String, detail: String },

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
