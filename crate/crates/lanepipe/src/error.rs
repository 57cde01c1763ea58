use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Frame geometry too small for the 3x3 window engine.
    #[error("invalid geometry {width}x{height}: both dimensions must be at least 3")]
    Geometry { width: u32, height: u32 },

    /// Gray weights violate the sum-to-256 constraint.
    #[error("gray weights ({0}, {1}, {2}) must sum to 256, got {sum}", sum = *.0 as u32 + *.1 as u32 + *.2 as u32)]
    Weights(u8, u8, u8),

    /// A configuration value is inconsistent with the frame geometry.
    #[error("configuration error: {0}")]
    Config(String),

    /// More pixels fed to a window engine than the frame holds.
    #[error("frame overflow: {fed} pixels fed into a {width}x{height} frame")]
    FrameOverflow { fed: usize, width: u32, height: u32 },

    /// Enqueue attempted on a full pixel queue.
    #[error("pixel queue full (capacity {capacity})")]
    QueueFull { capacity: usize },

    /// Zero clock frequency passed to a timing calculation.
    #[error("clock frequency must be positive")]
    ZeroClock,

    /// Malformed text input (stall schedules, traces, preload files, images).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// I2C wire-level protocol violation found by the checker.
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// An I2C transaction request that never reaches the wire.
    #[error("invalid transaction: {0}")]
    Transaction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
