//! Lane counting and positioning from a binarized edge frame.
//!
//! Only a horizontal band near the bottom of the frame is inspected: each
//! column's white-pixel count forms a histogram, columns whose count clears
//! a fraction of the band height become boundary candidates, nearby
//! candidates collapse into one boundary at their count-weighted centroid,
//! and the gaps between consecutive boundaries are the lanes. The vehicle's
//! lane is the one whose column span contains the frame center.

use serde::{Deserialize, Serialize};

use crate::filters::WHITE;
use crate::frame::ByteFrame;
use crate::stream::FrameGeometry;
use crate::{Error, Result};

/// Band placement and clustering knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig {
    /// First frame row of the inspection band.
    pub band_top: u32,
    /// Last frame row of the inspection band (inclusive).
    pub band_bottom: u32,
    /// A column is a boundary candidate when its white count reaches this
    /// fraction of the band height.
    pub fraction: f64,
    /// Candidates at most this many columns apart merge into one boundary.
    pub merge_gap: u32,
    /// Column taken as the vehicle position.
    pub center_col: u32,
}

impl DecisionConfig {
    /// Defaults for a given frame: the band covers the bottom rows where
    /// lane markings converge toward the camera, and the vehicle sits at
    /// the horizontal center. For a 416-row frame the band is rows 300..=415.
    pub fn default_for(geometry: FrameGeometry) -> Self {
        Self {
            band_top: 300.min(geometry.height - 2),
            band_bottom: geometry.height - 1,
            fraction: 0.30,
            merge_gap: 10,
            center_col: geometry.width / 2,
        }
    }

    pub fn validate(&self, geometry: FrameGeometry) -> Result<()> {
        if self.band_top > self.band_bottom || self.band_bottom >= geometry.height {
            return Err(Error::config(format!(
                "band rows {}..={} do not fit a {}-row frame",
                self.band_top, self.band_bottom, geometry.height
            )));
        }
        if self.center_col >= geometry.width {
            return Err(Error::config(format!(
                "center column {} outside a {}-column frame",
                self.center_col, geometry.width
            )));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::config(format!(
                "candidate fraction {} not in (0, 1]",
                self.fraction
            )));
        }
        Ok(())
    }

    /// Rows in the inspection band.
    pub fn band_height(&self) -> u32 {
        self.band_bottom - self.band_top + 1
    }

    /// White count a column needs to become a candidate.
    fn min_count(&self) -> f64 {
        self.fraction * f64::from(self.band_height())
    }
}

/// What the decision stage reports once per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneReport {
    /// Number of lanes = boundaries minus one (zero when fewer than two).
    pub lane_count: u32,
    /// 0-based lane the center column falls in, when `valid`.
    pub current_index: Option<u32>,
    /// Left boundary column of that lane, when `valid`.
    pub left_boundary: Option<u32>,
    /// Right boundary column of that lane, when `valid`.
    pub right_boundary: Option<u32>,
    /// Whether the center column lies between the outermost boundaries.
    pub valid: bool,
}

impl LaneReport {
    /// Report for a frame with no usable boundaries.
    pub fn invalid(lane_count: u32) -> Self {
        Self {
            lane_count,
            current_index: None,
            left_boundary: None,
            right_boundary: None,
            valid: false,
        }
    }
}

/// Per-column white counts over the inspection band.
pub fn column_histogram(frame: &ByteFrame, config: &DecisionConfig) -> Vec<u32> {
    let geometry = frame.geometry;
    let mut histogram = vec![0u32; geometry.width as usize];
    for row in config.band_top..=config.band_bottom {
        for col in 0..geometry.width {
            if frame.get(row, col) == WHITE {
                histogram[col as usize] += 1;
            }
        }
    }
    histogram
}

/// Integer round-half-up of num/den.
fn div_round_half_up(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Collapse candidate columns into boundary positions.
///
/// Candidates are walked left to right; a gap wider than `merge_gap`
/// starts a new cluster. Each cluster reduces to its count-weighted
/// centroid, rounded half-up, so a symmetric edge pair around a lane
/// marking lands on the marking itself.
pub fn cluster_boundaries(histogram: &[u32], config: &DecisionConfig) -> Vec<u32> {
    let min_count = config.min_count();
    let mut boundaries = Vec::new();
    let mut weight: u64 = 0;
    let mut moment: u64 = 0;
    let mut last_col: Option<u32> = None;

    let mut flush = |weight: &mut u64, moment: &mut u64| {
        if *weight > 0 {
            boundaries.push(div_round_half_up(*moment, *weight) as u32);
            *weight = 0;
            *moment = 0;
        }
    };

    for (col, &count) in histogram.iter().enumerate() {
        if f64::from(count) < min_count {
            continue;
        }
        let col = col as u32;
        if let Some(prev) = last_col {
            if col - prev > config.merge_gap {
                flush(&mut weight, &mut moment);
            }
        }
        weight += u64::from(count);
        moment += u64::from(count) * u64::from(col);
        last_col = Some(col);
    }
    flush(&mut weight, &mut moment);
    boundaries
}

/// Turn sorted boundary columns into the frame's lane report.
///
/// A lane is the half-open span [b_i, b_{i+1}) between consecutive
/// boundaries; the report is valid when the center column falls inside
/// the overall span.
pub fn locate(boundaries: &[u32], config: &DecisionConfig) -> LaneReport {
    let lane_count = boundaries.len().saturating_sub(1) as u32;
    if lane_count == 0 {
        return LaneReport::invalid(0);
    }
    let first = boundaries[0];
    let last = *boundaries.last().unwrap();
    let center = config.center_col;
    if !(first <= center && center < last) {
        return LaneReport::invalid(lane_count);
    }
    // The last index satisfying b_i <= center; the guard above ensures a
    // right neighbor exists.
    let index = boundaries
        .iter()
        .rposition(|&b| b <= center)
        .expect("first <= center");
    LaneReport {
        lane_count,
        current_index: Some(index as u32),
        left_boundary: Some(boundaries[index]),
        right_boundary: Some(boundaries[index + 1]),
        valid: true,
    }
}

/// Histogram, clustering, and location in one call.
pub fn analyze(frame: &ByteFrame, config: &DecisionConfig) -> Result<LaneReport> {
    config.validate(frame.geometry)?;
    let histogram = column_histogram(frame, config);
    let boundaries = cluster_boundaries(&histogram, config);
    Ok(locate(&boundaries, config))
}

/// Streaming accumulator: consumes binarized pixels in raster order and
/// builds the same histogram [`analyze`] computes from a stored frame.
///
/// The report is available as soon as the last band-row pixel has been
/// pushed; trailing rows below the band (there are none with the default
/// band, which ends on the last row) only advance the cursor.
#[derive(Debug, Clone)]
pub struct DecisionAccumulator {
    geometry: FrameGeometry,
    config: DecisionConfig,
    histogram: Vec<u32>,
    received: usize,
}

impl DecisionAccumulator {
    pub fn new(geometry: FrameGeometry, config: DecisionConfig) -> Result<Self> {
        config.validate(geometry)?;
        Ok(Self {
            geometry,
            config,
            histogram: vec![0; geometry.width as usize],
            received: 0,
        })
    }

    /// Account one raster-order pixel.
    pub fn push(&mut self, pixel: u8) -> Result<()> {
        if self.received == self.geometry.pixel_count() {
            return Err(Error::FrameOverflow {
                fed: self.received + 1,
                width: self.geometry.width,
                height: self.geometry.height,
            });
        }
        let row = self.received as u32 / self.geometry.width;
        let col = self.received as u32 % self.geometry.width;
        if pixel == WHITE && row >= self.config.band_top && row <= self.config.band_bottom {
            self.histogram[col as usize] += 1;
        }
        self.received += 1;
        Ok(())
    }

    pub fn pixels_received(&self) -> usize {
        self.received
    }

    /// Whether every band row has been seen.
    pub fn band_complete(&self) -> bool {
        self.received >= (self.config.band_bottom as usize + 1) * self.geometry.width as usize
    }

    pub fn frame_complete(&self) -> bool {
        self.received == self.geometry.pixel_count()
    }

    pub fn histogram(&self) -> &[u32] {
        &self.histogram
    }

    /// Report from the histogram accumulated so far.
    pub fn report(&self) -> LaneReport {
        let boundaries = cluster_boundaries(&self.histogram, &self.config);
        locate(&boundaries, &self.config)
    }

    pub fn frame_reset(&mut self) {
        self.histogram.fill(0);
        self.received = 0;
    }
}
