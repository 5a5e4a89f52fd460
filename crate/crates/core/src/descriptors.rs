//! Appearance records for extracted regions.

use serde::{Deserialize, Serialize};

use crate::channels::{intensity_of, Frame};
use crate::error::{Error, Result};
use crate::ior::Region;

pub const BINS: usize = 10;
pub const HIST_CHANNELS: usize = 4;

/// Per-channel 10-bin probability distributions over red, green, blue and
/// intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorHistogram {
    pub bins: [[f64; BINS]; HIST_CHANNELS],
}

/// Bin index for a value in `[0, 1]`; bins are half-open except the last.
#[inline]
pub fn bin_of(v: f64) -> usize {
    ((v * BINS as f64).floor() as usize).min(BINS - 1)
}

impl ColorHistogram {
    /// Normalized histogram of a set of RGB samples.
    pub fn from_pixels<'a>(pixels: impl IntoIterator<Item = &'a [f64; 3]>) -> Result<Self> {
        let mut counts = [[0usize; BINS]; HIST_CHANNELS];
        let mut n = 0usize;
        for &p in pixels {
            let values = [p[0], p[1], p[2], intensity_of(p)];
            for (ch, v) in values.into_iter().enumerate() {
                counts[ch][bin_of(v)] += 1;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidInput("histogram of an empty region".into()));
        }
        let bins = counts.map(|row| row.map(|c| c as f64 / n as f64));
        Ok(ColorHistogram { bins })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDescriptor {
    pub histogram: ColorHistogram,
    pub size: usize,
    pub center: (f64, f64),
    pub frame_index: u64,
    /// `center.y` relative to the frame height: 0 at the top row, 1 at the bottom.
    pub row_band: f64,
}

/// Builds the appearance record of `region` from the working-size frame.
pub fn describe(region: &Region, frame: &Frame) -> Result<RegionDescriptor> {
    if region.pixels.is_empty() {
        return Err(Error::InvalidInput("empty region".into()));
    }
    let (w, h) = (frame.width(), frame.height());
    if let Some(&(x, y)) = region.pixels.iter().find(|&&(x, y)| x >= w || y >= h) {
        return Err(Error::InvalidInput(format!(
            "region pixel ({x}, {y}) outside {w}x{h} frame"
        )));
    }
    let samples: Vec<[f64; 3]> = region
        .pixels
        .iter()
        .map(|&(x, y)| frame.pixel(x, y))
        .collect();
    let histogram = ColorHistogram::from_pixels(&samples)?;
    let row_band = if h > 1 {
        (region.center.1 / (h - 1) as f64).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(RegionDescriptor {
        histogram,
        size: region.pixels.len(),
        center: region.center,
        frame_index: frame.index,
        row_band,
    })
}
