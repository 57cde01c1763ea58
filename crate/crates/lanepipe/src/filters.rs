//! The two 3x3 window operators and the threshold comparator.
//!
//! Both operators are pure integer functions of a [`Window3x3`]: the
//! averaging filter smooths speckle before edge extraction, and the Sobel
//! step folds the two gradient responses into a single magnitude that the
//! comparator reduces to a black/white pixel.

use crate::window::Window3x3;
use crate::{Error, Result};

/// Largest value `sobel_magnitude` can produce: |Gx| and |Gy| each peak at
/// 4*255 = 1020 (weights sum to 4 per sign).
pub const SOBEL_MAG_MAX: u16 = 2040;

/// Intensity written for an above-threshold pixel.
pub const WHITE: u8 = 255;

/// Horizontal-gradient kernel, row-major.
pub const SOBEL_GX: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];

/// Vertical-gradient kernel, row-major.
pub const SOBEL_GY: [[i32; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];

/// A binarized pixel: 0 or [`WHITE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryPixel(pub u8);

impl BinaryPixel {
    pub fn is_white(self) -> bool {
        self.0 == WHITE
    }
}

/// Edge comparator settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SobelConfig {
    /// Magnitudes at or above this become white.
    pub threshold: u16,
}

impl SobelConfig {
    pub fn new(threshold: u16) -> Result<Self> {
        if threshold > SOBEL_MAG_MAX {
            return Err(Error::config(format!(
                "sobel threshold {threshold} exceeds the magnitude ceiling {SOBEL_MAG_MAX}"
            )));
        }
        Ok(Self { threshold })
    }
}

impl Default for SobelConfig {
    fn default() -> Self {
        Self { threshold: 100 }
    }
}

/// Mean of the nine taps, truncated: floor(sum / 9). Sum peaks at 2295 so
/// the division is exact 12-bit work; the result always fits a byte.
pub fn average(window: &Window3x3) -> u8 {
    let sum: u32 = window.flat().iter().map(|&t| u32::from(t)).sum();
    (sum / 9) as u8
}

/// |Gx| + |Gy| for the window. The L1 fold avoids the square root a true
/// Euclidean magnitude would need and keeps the range at [0, 2040].
pub fn sobel_magnitude(window: &Window3x3) -> u16 {
    let mut gx: i32 = 0;
    let mut gy: i32 = 0;
    for i in 0..3 {
        for j in 0..3 {
            let t = i32::from(window.taps[i][j]);
            gx += SOBEL_GX[i][j] * t;
            gy += SOBEL_GY[i][j] * t;
        }
    }
    (gx.abs() + gy.abs()) as u16
}

/// Threshold comparator: white at or above the threshold, black below.
pub fn binarize(magnitude: u16, config: SobelConfig) -> BinaryPixel {
    BinaryPixel(if magnitude >= config.threshold { WHITE } else { 0 })
}
