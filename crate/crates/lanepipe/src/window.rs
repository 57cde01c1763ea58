//! Shared 3x3 line-buffer machinery for the averaging and Sobel stages.
//!
//! A raster-order 8-bit stream enters a cascade of two width-deep row
//! buffers. The live input and the two delayed row streams each feed a
//! 3-deep shift register, and those nine taps form one zero-padded window
//! per step once the warm-up is over. The first window appears on the
//! (width+6)-th fed pixel: width cycles to fill row buffer 1, 3 pixels into
//! row buffer 2, 2 cycles of tap shifting, and 1 compute cycle.
//!
//! A frame of width x height pixels yields exactly width x height windows
//! (borders are zero-padded). The windows for the bottom and right borders
//! emerge after the final input pixel, while the engine keeps clocking with
//! zero input; [`LineBuffer::drain_step`] models those flush cycles.

use std::collections::VecDeque;

use crate::stream::FrameGeometry;
use crate::{Error, Result};

/// Pipeline depth between window formation and emission: two tap-shift
/// cycles, one compute cycle, one output cycle. Together with the
/// width+1 steps needed before the first window forms, this lands the
/// first emission on step width+5 (0-based), i.e. fed pixel width+6.
const EMIT_DELAY: usize = 4;

/// A 3x3 neighborhood of 8-bit gray pixels with its frame position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window3x3 {
    /// Row-major taps; out-of-frame positions hold the padding value 0.
    pub taps: [[u8; 3]; 3],
    /// Frame coordinates (row, col) of the window center.
    pub center: (u32, u32),
}

impl Window3x3 {
    /// All nine taps in row-major order.
    pub fn flat(&self) -> [u8; 9] {
        let t = &self.taps;
        [
            t[0][0], t[0][1], t[0][2], t[1][0], t[1][1], t[1][2], t[2][0], t[2][1], t[2][2],
        ]
    }

    /// Build a window with constant taps, centered anywhere. Test helper.
    pub fn constant(value: u8) -> Self {
        Self {
            taps: [[value; 3]; 3],
            center: (1, 1),
        }
    }

    /// Build a window directly from taps. Test helper.
    pub fn from_taps(taps: [[u8; 3]; 3]) -> Self {
        Self { taps, center: (1, 1) }
    }
}

/// Line-buffered sliding-window former, stride 1, zero padding.
#[derive(Debug, Clone)]
pub struct LineBuffer {
    geometry: FrameGeometry,
    /// Delays the input stream by one row.
    row_buffer_1: Vec<u8>,
    /// Delays row_buffer_1's output by another row.
    row_buffer_2: Vec<u8>,
    /// 3-deep shift taps per row stream: [two rows up, one row up, live].
    /// Index 2 holds the newest sample.
    shift_taps: [[u8; 3]; 3],
    /// Virtual steps taken (real feeds + drain steps).
    step: usize,
    /// Real pixels fed for the current frame.
    fill_count: usize,
    emitted: usize,
    pending: VecDeque<Window3x3>,
}

impl LineBuffer {
    pub fn new(geometry: FrameGeometry) -> Self {
        let w = geometry.width as usize;
        Self {
            geometry,
            row_buffer_1: vec![0; w],
            row_buffer_2: vec![0; w],
            shift_taps: [[0; 3]; 3],
            step: 0,
            fill_count: 0,
            emitted: 0,
            pending: VecDeque::with_capacity(EMIT_DELAY + 1),
        }
    }

    /// Restore the state a fresh frame starts from.
    pub fn frame_reset(&mut self) {
        self.row_buffer_1.fill(0);
        self.row_buffer_2.fill(0);
        self.shift_taps = [[0; 3]; 3];
        self.step = 0;
        self.fill_count = 0;
        self.emitted = 0;
        self.pending.clear();
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    /// Real pixels fed so far.
    pub fn fill_count(&self) -> usize {
        self.fill_count
    }

    /// (row, col) the next fed pixel lands on.
    pub fn cursor(&self) -> (u32, u32) {
        let w = self.geometry.width as usize;
        ((self.fill_count / w) as u32, (self.fill_count % w) as u32)
    }

    /// Whether the whole frame has been fed.
    pub fn frame_fed(&self) -> bool {
        self.fill_count == self.geometry.pixel_count()
    }

    pub fn windows_emitted(&self) -> usize {
        self.emitted
    }

    /// Whether every window of the frame has been emitted.
    pub fn fully_emitted(&self) -> bool {
        self.emitted == self.geometry.pixel_count()
    }

    /// Feed one pixel; returns the window emitted on this step, if any.
    ///
    /// Feeding more than width*height pixels without a `frame_reset` is a
    /// contract violation and reports `Error::FrameOverflow`.
    pub fn feed(&mut self, pixel: u8) -> Result<Option<Window3x3>> {
        if self.frame_fed() {
            return Err(Error::FrameOverflow {
                fed: self.fill_count + 1,
                width: self.geometry.width,
                height: self.geometry.height,
            });
        }
        self.fill_count += 1;
        Ok(self.advance(pixel))
    }

    /// One flush cycle after the frame is fully fed: the engine clocks with
    /// zero input so the remaining zero-padded border windows drain out.
    /// Returns `None` before the frame is complete or once every window has
    /// been emitted.
    pub fn drain_step(&mut self) -> Option<Window3x3> {
        if !self.frame_fed() || self.fully_emitted() {
            return None;
        }
        self.advance(0)
    }

    /// One virtual step: ring-buffer update, tap shift, window formation,
    /// delayed emission.
    fn advance(&mut self, pixel: u8) -> Option<Window3x3> {
        let w = self.geometry.width as usize;
        let s = self.step;
        self.step += 1;

        let col = s % w;
        let one_up = self.row_buffer_1[col];
        let two_up = self.row_buffer_2[col];
        self.row_buffer_2[col] = one_up;
        self.row_buffer_1[col] = pixel;

        for (stream, sample) in self.shift_taps.iter_mut().zip([two_up, one_up, pixel]) {
            stream[0] = stream[1];
            stream[1] = stream[2];
            stream[2] = sample;
        }

        if s + 1 > w + 1 {
            // Window ordinal k forms on step k + w + 1.
            let k = s - w - 1;
            self.pending.push_back(self.form_window(k));
        }

        if s + 1 > w + 5 && self.emitted < self.geometry.pixel_count() {
            self.emitted += 1;
            self.pending.pop_front()
        } else {
            None
        }
    }

    /// Assemble the window for raster ordinal `k` from the shift taps,
    /// masking out-of-frame positions to the padding value.
    fn form_window(&self, k: usize) -> Window3x3 {
        let w = self.geometry.width as i64;
        let h = self.geometry.height as i64;
        let center_row = k as i64 / w;
        let center_col = k as i64 % w;
        let mut taps = [[0u8; 3]; 3];
        for (i, row) in taps.iter_mut().enumerate() {
            for (j, tap) in row.iter_mut().enumerate() {
                let rr = center_row - 1 + i as i64;
                let cc = center_col - 1 + j as i64;
                if rr >= 0 && rr < h && cc >= 0 && cc < w {
                    *tap = self.shift_taps[i][j];
                }
            }
        }
        Window3x3 {
            taps,
            center: (center_row as u32, center_col as u32),
        }
    }
}
