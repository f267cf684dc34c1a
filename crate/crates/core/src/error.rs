//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    /// Register dimension M^N exceeds the configured cap.
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: u128, cap: usize },

    /// Operands disagree on register shape.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The post-selection cannot be reached through any measurement outcome.
    #[error("impossible post-selection: {0}")]
    ImpossiblePostselection(String),

    /// Reading or writing an artifact failed.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A configuration file failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub fn shape(msg: impl Into<String>) -> Self {
        SimError::ShapeMismatch(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        SimError::InvalidArgument(msg.into())
    }
}
