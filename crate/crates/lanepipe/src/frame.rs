//! Whole-frame pixel containers shared by the codec, the reference model, and
//! the synthetic generators.

use crate::stream::FrameGeometry;

/// An RGB frame, 8 bits per channel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbFrame {
    pub geometry: FrameGeometry,
    /// Interleaved R, G, B bytes; length = width * height * 3.
    pub data: Vec<u8>,
}

impl RgbFrame {
    pub fn new(geometry: FrameGeometry) -> Self {
        let len = geometry.pixel_count() * 3;
        Self {
            geometry,
            data: vec![0; len],
        }
    }

    pub fn from_data(geometry: FrameGeometry, data: Vec<u8>) -> crate::Result<Self> {
        if data.len() != geometry.pixel_count() * 3 {
            return Err(crate::Error::config(format!(
                "RGB data length {} does not match {}x{}",
                data.len(),
                geometry.width,
                geometry.height
            )));
        }
        Ok(Self { geometry, data })
    }

    pub fn pixel(&self, row: u32, col: u32) -> [u8; 3] {
        let i = (row as usize * self.geometry.width as usize + col as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, row: u32, col: u32, rgb: [u8; 3]) {
        let i = (row as usize * self.geometry.width as usize + col as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Pack each pixel into the 24-bit beat format the stream ingests
    /// (R in bits 23..16, G in 15..8, B in 7..0).
    pub fn to_beats(&self) -> Vec<u32> {
        self.data
            .chunks_exact(3)
            .map(|p| (u32::from(p[0]) << 16) | (u32::from(p[1]) << 8) | u32::from(p[2]))
            .collect()
    }
}

/// A single-channel 8-bit frame (gray, averaged, or binarized), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteFrame {
    pub geometry: FrameGeometry,
    pub data: Vec<u8>,
}

impl ByteFrame {
    pub fn new(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            data: vec![0; geometry.pixel_count()],
        }
    }

    pub fn from_data(geometry: FrameGeometry, data: Vec<u8>) -> crate::Result<Self> {
        if data.len() != geometry.pixel_count() {
            return Err(crate::Error::config(format!(
                "frame data length {} does not match {}x{}",
                data.len(),
                geometry.width,
                geometry.height
            )));
        }
        Ok(Self { geometry, data })
    }

    pub fn get(&self, row: u32, col: u32) -> u8 {
        self.data[row as usize * self.geometry.width as usize + col as usize]
    }

    pub fn set(&mut self, row: u32, col: u32, value: u8) {
        self.data[row as usize * self.geometry.width as usize + col as usize] = value;
    }

    /// Zero-padded read: coordinates outside the frame yield 0.
    pub fn get_padded(&self, row: i64, col: i64) -> u8 {
        if row < 0
            || col < 0
            || row >= i64::from(self.geometry.height)
            || col >= i64::from(self.geometry.width)
        {
            0
        } else {
            self.get(row as u32, col as u32)
        }
    }
}

/// A real-valued frame, used by the floating-point reference path.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatFrame {
    pub geometry: FrameGeometry,
    pub data: Vec<f64>,
}

impl FloatFrame {
    pub fn new(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            data: vec![0.0; geometry.pixel_count()],
        }
    }

    pub fn get(&self, row: u32, col: u32) -> f64 {
        self.data[row as usize * self.geometry.width as usize + col as usize]
    }

    pub fn set(&mut self, row: u32, col: u32, value: f64) {
        self.data[row as usize * self.geometry.width as usize + col as usize] = value;
    }

    pub fn get_padded(&self, row: i64, col: i64) -> f64 {
        if row < 0
            || col < 0
            || row >= i64::from(self.geometry.height)
            || col >= i64::from(self.geometry.width)
        {
            0.0
        } else {
            self.get(row as u32, col as u32)
        }
    }
}
