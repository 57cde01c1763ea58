//! Whole-frame reference implementations the streaming pipeline is checked
//! against.
//!
//! Two families live here. The float variants (`gray_float`, `conv2d_ref`)
//! carry the real-coefficient math and quantify what the fixed-point
//! datapath gives up. The integer variants mirror the datapath's exact
//! truncation rules — shift-right-8 gray, floor division by 9, L1 Sobel —
//! through plain nested-loop index arithmetic, so a streaming run can be
//! compared pixel-for-pixel with no tolerance.

use serde::Serialize;

use crate::frame::{ByteFrame, FloatFrame, RgbFrame};
use crate::lane::{analyze, DecisionConfig, LaneReport};
use crate::rgb2gray::{GrayWeights, PixelRgb};
use crate::Result;

/// Real-coefficient luminance of one pixel.
pub fn gray_float(p: PixelRgb) -> f64 {
    0.2989 * f64::from(p.red) + 0.587 * f64::from(p.green) + 0.114 * f64::from(p.blue)
}

/// Absolute error of the fixed-point gray conversion against the real
/// formula for one pixel.
pub fn gray_abs_error(p: PixelRgb, weights: GrayWeights) -> f64 {
    (f64::from(crate::rgb2gray::to_gray(p, weights)) - gray_float(p)).abs()
}

/// Largest fixed-point gray error over the full 24-bit RGB cube.
pub fn max_gray_error_exhaustive(weights: GrayWeights) -> f64 {
    let mut max = 0.0f64;
    for red in 0..=255u8 {
        for green in 0..=255u8 {
            for blue in 0..=255u8 {
                let e = gray_abs_error(PixelRgb { red, green, blue }, weights);
                if e > max {
                    max = e;
                }
            }
        }
    }
    max
}

/// Integer gray conversion of a whole frame.
pub fn gray_ref(frame: &RgbFrame, weights: GrayWeights) -> ByteFrame {
    let g = frame.geometry;
    let mut out = ByteFrame::new(g);
    for row in 0..g.height {
        for col in 0..g.width {
            let [r, gr, b] = frame.pixel(row, col);
            let sum = u32::from(weights.w_r) * u32::from(r)
                + u32::from(weights.w_g) * u32::from(gr)
                + u32::from(weights.w_b) * u32::from(b);
            out.set(row, col, (sum >> 8) as u8);
        }
    }
    out
}

/// Real-valued luminance of a whole frame.
pub fn gray_float_frame(frame: &RgbFrame) -> FloatFrame {
    let g = frame.geometry;
    let mut out = FloatFrame::new(g);
    for row in 0..g.height {
        for col in 0..g.width {
            let [r, gr, b] = frame.pixel(row, col);
            out.set(
                row,
                col,
                gray_float(PixelRgb {
                    red: r,
                    green: gr,
                    blue: b,
                }),
            );
        }
    }
    out
}

/// Direct 3x3 convolution: stride 1, zero padding, same output size.
pub fn conv2d_ref(input: &FloatFrame, kernel: &[[f64; 3]; 3]) -> FloatFrame {
    let g = input.geometry;
    let mut out = FloatFrame::new(g);
    for row in 0..g.height {
        for col in 0..g.width {
            let mut acc = 0.0;
            for (i, krow) in kernel.iter().enumerate() {
                for (j, &k) in krow.iter().enumerate() {
                    let rr = i64::from(row) + i as i64 - 1;
                    let cc = i64::from(col) + j as i64 - 1;
                    acc += k * input.get_padded(rr, cc);
                }
            }
            out.set(row, col, acc);
        }
    }
    out
}

/// Integer 3x3 mean with floor division, zero padding. Padding zeros
/// count toward the sum but the divisor stays 9, matching the datapath.
pub fn average_ref(gray: &ByteFrame) -> ByteFrame {
    let g = gray.geometry;
    let mut out = ByteFrame::new(g);
    for row in 0..g.height {
        for col in 0..g.width {
            let mut sum: u32 = 0;
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    sum += u32::from(gray.get_padded(i64::from(row) + dr, i64::from(col) + dc));
                }
            }
            out.set(row, col, (sum / 9) as u8);
        }
    }
    out
}

/// Integer Sobel |Gx|+|Gy| plus inclusive-threshold binarization, written
/// with its own kernel literals so it shares nothing with the streaming
/// implementation.
pub fn sobel_binary_ref(avg: &ByteFrame, threshold: u16) -> ByteFrame {
    let g = avg.geometry;
    let mut out = ByteFrame::new(g);
    for row in 0..g.height {
        for col in 0..g.width {
            let t = |dr: i64, dc: i64| {
                i32::from(avg.get_padded(i64::from(row) + dr, i64::from(col) + dc))
            };
            let gx = t(-1, 1) + 2 * t(0, 1) + t(1, 1) - t(-1, -1) - 2 * t(0, -1) - t(1, -1);
            let gy = t(1, -1) + 2 * t(1, 0) + t(1, 1) - t(-1, -1) - 2 * t(-1, 0) - t(-1, 1);
            let mag = gx.abs() + gy.abs();
            out.set(row, col, if mag >= i32::from(threshold) { 255 } else { 0 });
        }
    }
    out
}

/// Every intermediate the reference chain produces.
#[derive(Debug, Clone)]
pub struct RefOutputs {
    pub gray: ByteFrame,
    pub averaged: ByteFrame,
    pub binary: ByteFrame,
    pub report: LaneReport,
}

/// Non-streaming end-to-end reference: integer gray, integer average,
/// integer Sobel/binarize, then the documented lane decision.
pub fn pipeline_ref(
    frame: &RgbFrame,
    weights: GrayWeights,
    sobel_threshold: u16,
    decision: &DecisionConfig,
) -> Result<RefOutputs> {
    let gray = gray_ref(frame, weights);
    let averaged = average_ref(&gray);
    let binary = sobel_binary_ref(&averaged, sobel_threshold);
    let report = analyze(&binary, decision)?;
    Ok(RefOutputs {
        gray,
        averaged,
        binary,
        report,
    })
}

/// Max and mean absolute deviation between two same-length stage outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageDiff {
    pub max_abs: u32,
    pub mean_abs: f64,
}

pub fn diff_bytes(a: &[u8], b: &[u8]) -> StageDiff {
    assert_eq!(a.len(), b.len(), "stage outputs differ in length");
    let mut max = 0u32;
    let mut total = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        let d = u32::from(x.abs_diff(y));
        max = max.max(d);
        total += u64::from(d);
    }
    StageDiff {
        max_abs: max,
        mean_abs: if a.is_empty() {
            0.0
        } else {
            total as f64 / a.len() as f64
        },
    }
}
