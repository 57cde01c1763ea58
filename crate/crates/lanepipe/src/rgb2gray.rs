//! Stage 1: 24-bit RGB to 8-bit grayscale with 8-bit fixed-point weights.
//!
//! The conversion computes `(w_r*R + w_g*G + w_b*B) >> 8` in integer
//! arithmetic. The weights carry 8 fractional bits and must sum to exactly
//! 256, which makes the conversion a convex combination: white maps to 255
//! and the 16-bit product sum can never overflow past 8 output bits.

use serde::{Deserialize, Serialize};

/// One 24-bit input pixel, 8 bits per channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRgb {
    pub red: u8,
    pub green: u8,
    pub blue: u8,
}

impl PixelRgb {
    pub fn new(red: u8, green: u8, blue: u8) -> Self {
        Self { red, green, blue }
    }

    /// Unpack from the 24-bit stream beat layout (R high byte).
    pub fn from_beat(beat: u32) -> Self {
        Self {
            red: (beat >> 16) as u8,
            green: (beat >> 8) as u8,
            blue: beat as u8,
        }
    }
}

/// Grayscale weights in unsigned 0.8 fixed point.
///
/// The default quantizes the 0.2989 / 0.587 / 0.114 coefficients to
/// (77, 150, 29), nudged so the sum is exactly 256.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayWeights {
    pub w_r: u8,
    pub w_g: u8,
    pub w_b: u8,
}

impl GrayWeights {
    /// Build weights, enforcing the sum-to-256 invariant.
    pub fn new(w_r: u8, w_g: u8, w_b: u8) -> crate::Result<Self> {
        if u32::from(w_r) + u32::from(w_g) + u32::from(w_b) != 256 {
            return Err(crate::Error::Weights(w_r, w_g, w_b));
        }
        Ok(Self { w_r, w_g, w_b })
    }
}

impl Default for GrayWeights {
    fn default() -> Self {
        Self {
            w_r: 77,
            w_g: 150,
            w_b: 29,
        }
    }
}

/// Convert one pixel to 8-bit gray: weighted sum truncated by 8 bits (floor).
///
/// Streamed, the stage registers this result once, so its latency is exactly
/// one cycle.
pub fn to_gray(p: PixelRgb, w: GrayWeights) -> u8 {
    let sum = u32::from(w.w_r) * u32::from(p.red)
        + u32::from(w.w_g) * u32::from(p.green)
        + u32::from(w.w_b) * u32::from(p.blue);
    (sum >> 8) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_input_is_zero() {
        assert_eq!(to_gray(PixelRgb::new(0, 0, 0), GrayWeights::default()), 0);
    }

    #[test]
    fn white_maps_to_white() {
        // (77+150+29)*255 = 65280, 65280 >> 8 = 255.
        assert_eq!(
            to_gray(PixelRgb::new(255, 255, 255), GrayWeights::default()),
            255
        );
    }

    #[test]
    fn pure_red() {
        // floor(77*255/256) = floor(76.69) = 76.
        assert_eq!(
            to_gray(PixelRgb::new(255, 0, 0), GrayWeights::default()),
            76
        );
    }

    #[test]
    fn weights_must_sum_to_256() {
        assert!(GrayWeights::new(77, 150, 29).is_ok());
        assert!(GrayWeights::new(77, 150, 30).is_err());
        assert!(GrayWeights::new(0, 0, 0).is_err());
    }

    #[test]
    fn beat_unpacking() {
        let p = PixelRgb::from_beat(0x00AB_CD12);
        assert_eq!((p.red, p.green, p.blue), (0xAB, 0xCD, 0x12));
    }

    proptest! {
        #[test]
        fn monotone_in_each_channel(r in 0u8..255, g in 0u8..255, b in 0u8..255) {
            let w = GrayWeights::default();
            let base = to_gray(PixelRgb::new(r, g, b), w);
            prop_assert!(to_gray(PixelRgb::new(r + 1, g, b), w) >= base);
            prop_assert!(to_gray(PixelRgb::new(r, g + 1, b), w) >= base);
            prop_assert!(to_gray(PixelRgb::new(r, g, b + 1), w) >= base);
        }

        #[test]
        fn bounded_by_channel_range(r in any::<u8>(), g in any::<u8>(), b in any::<u8>()) {
            let w = GrayWeights::default();
            let out = to_gray(PixelRgb::new(r, g, b), w);
            let lo = r.min(g).min(b);
            let hi = r.max(g).max(b);
            prop_assert!(out >= lo.saturating_sub(1));
            prop_assert!(out <= hi);
        }
    }
}
