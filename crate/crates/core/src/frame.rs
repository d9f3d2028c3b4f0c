use crate::error::{Error, Result};

/// An 8-bit frame, 1 (gray) or 3 (RGB, interleaved) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
    /// Seconds since the start of the stream.
    pub timestamp: f64,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>, timestamp: f64) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Validation(format!(
                "frames must have 1 or 3 channels, got {channels}"
            )));
        }
        if width * height * channels != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{channels} frame needs {} bytes, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            channels,
            data,
            timestamp,
        })
    }

    /// A frame with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8, timestamp: f64) -> Result<Self> {
        Frame::new(width, height, channels, vec![value; width * height * channels], timestamp)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// ITU-R BT.601 luma of one pixel scaled by 1000, in [0, 255000].
    #[inline]
    pub fn luma_milli(&self, x: usize, y: usize) -> u32 {
        let p = self.pixel(x, y);
        if self.channels == 1 {
            p[0] as u32 * 1000
        } else {
            299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32
        }
    }

    /// ITU-R BT.601 luma of one pixel, in [0, 255].
    #[inline]
    pub fn luma(&self, x: usize, y: usize) -> f64 {
        self.luma_milli(x, y) as f64 / 1000.0
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Sum of all samples; used as a cheap mass measure in tests and tools.
    pub fn sample_sum(&self) -> u64 {
        self.data.iter().map(|&v| v as u64).sum()
    }
}
