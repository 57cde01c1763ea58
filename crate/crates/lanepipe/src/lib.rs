//! Cycle-accurate model of a streaming lane-detection datapath, plus the
//! I2C-attached light and temperature control units that ride along with it.
//!
//! The image path is a five-stage pipeline fed by a ready/valid pixel stream:
//!
//! 1. RGB-to-gray conversion with 8-bit fixed-point weights ([`rgb2gray`])
//! 2. 3x3 averaging over line-buffered windows ([`window`], [`filters`])
//! 3. 3x3 Sobel gradient magnitude ([`filters`])
//! 4. Threshold binarization ([`filters`])
//! 5. Lane identification from a column histogram ([`lane`])
//!
//! [`stream`] provides the handshake substrate: a deterministic cycle
//! scheduler, per-boundary FIFOs, stall injection, and timing metrics. The
//! simulated stage latencies (1 cycle for the gray converter, width+6 for each
//! window filter) and the one-pixel-per-cycle steady-state rate are contracts,
//! not approximations; the test suite pins them exactly.
//!
//! [`refmodel`] carries the non-streaming reference implementations used to
//! cross-check the streaming machinery, [`i2c`] the bit-level bus emulation,
//! and [`control`] the light/temperature decision logic.

pub mod control;
pub mod filters;
pub mod frame;
pub mod i2c;
pub mod lane;
pub mod pnm;
pub mod refmodel;
pub mod rgb2gray;
pub mod stream;
pub mod synth;
pub mod window;

mod error;

pub use error::Error;
pub use filters::{average, binarize, sobel_magnitude, BinaryPixel, SobelConfig};
pub use frame::{ByteFrame, FloatFrame, RgbFrame};
pub use lane::{DecisionConfig, LaneReport};
pub use rgb2gray::{to_gray, GrayWeights, PixelRgb};
pub use stream::{
    estimate_frame_time, CycleStats, FrameGeometry, Pipeline, PipelineConfig, StallSchedule,
};
pub use window::{LineBuffer, Window3x3};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
