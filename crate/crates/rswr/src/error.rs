//! Error taxonomy shared across the crate.
//!
//! The variants map onto the CLI exit codes: protocol failures (including the
//! zero-span abort) exit with 2, everything else user-facing exits with 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RswrError {
    /// A caller violated an operation precondition (shape mismatch, bad index, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested discretization is unstable (CFL violation).
    #[error("stability: {0}")]
    Stability(String),

    /// A configuration value is out of range or inconsistent.
    #[error("configuration: {0}")]
    Config(String),

    /// A configuration field failed validation; names the offending field.
    #[error("configuration field `{field}`: {message}")]
    Schema { field: String, message: String },

    /// The worker protocol broke down (missing vote, out-of-round message, ...).
    #[error("protocol: {0}")]
    Protocol(String),

    /// No forward progress is possible: an adjacent pair selected a zero span.
    #[error(
        "protocol: zero span in window {window} for subdomain pair ({}, {}) \
         with epsilon={epsilon:.3e}, overlap_cells={overlap_cells}; \
         epsilon is too tight or the overlap is too thin for any progress",
        pair.0, pair.1
    )]
    ZeroSpan {
        window: u64,
        pair: (usize, usize),
        epsilon: f64,
        overlap_cells: usize,
    },

    /// An internal invariant failed; always a bug.
    #[error("internal: {0}")]
    Internal(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse: {0}")]
    Parse(#[from] serde_json::Error),
}

impl RswrError {
    /// Process exit code for the CLI: 1 for configuration/input problems,
    /// 2 for protocol failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            RswrError::Protocol(_) | RswrError::ZeroSpan { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, RswrError>;
