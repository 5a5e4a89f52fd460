//! Frame representation, working-resolution resampling and the four feature
//! channels: red/green opponency, blue/yellow opponency, intensity and
//! frame-difference motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Smallest side length a working frame may have.
pub const MIN_SIDE: usize = 8;

/// One decoded RGB frame with components in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
    pub index: u64,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>, index: u64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "frame has zero dimension ({width}x{height})"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "frame of {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels
            .iter()
            .flatten()
            .find(|c| !(0.0..=1.0).contains(*c))
        {
            return Err(Error::InvalidInput(format!(
                "pixel component {bad} outside [0, 1]"
            )));
        }
        Ok(Frame {
            width,
            height,
            pixels,
            index,
        })
    }

    /// Builds a frame from interleaved 8-bit RGB samples.
    pub fn from_rgb8(width: usize, height: usize, rgb: &[u8], index: u64) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::InvalidInput(format!(
                "expected {} rgb bytes, got {}",
                width * height * 3,
                rgb.len()
            )));
        }
        let pixels = rgb
            .chunks_exact(3)
            .map(|c| {
                [
                    c[0] as f64 / 255.0,
                    c[1] as f64 / 255.0,
                    c[2] as f64 / 255.0,
                ]
            })
            .collect();
        Frame::new(width, height, pixels, index)
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3], index: u64) -> Result<Self> {
        Frame::new(width, height, vec![rgb; width * height], index)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    /// Interleaved 8-bit RGB, rounding each component.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Frame gap used by the motion channel.
    pub latency_tau: usize,
    pub target_long_side: usize,
    pub target_short_side: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            latency_tau: 1,
            target_long_side: 86,
            target_short_side: 64,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latency_tau < 1 {
            return Err(Error::config("tau", "must be at least 1"));
        }
        if self.target_short_side < MIN_SIDE {
            return Err(Error::config(
                "target_short_side",
                format!("must be at least {MIN_SIDE}"),
            ));
        }
        if self.target_long_side < self.target_short_side {
            return Err(Error::config(
                "target_long_side",
                "must not be smaller than target_short_side",
            ));
        }
        Ok(())
    }

    /// Working dimensions for an input of `width` x `height`.
    ///
    /// The longer input side maps to `target_long_side`; the other side keeps
    /// the aspect ratio, rounded and clamped to `[MIN_SIDE, target_short_side]`.
    /// Square inputs treat the width as the long side.
    pub fn working_dims(&self, width: usize, height: usize) -> (usize, usize) {
        let long = self.target_long_side;
        let short_of = |short: usize, long_in: usize| {
            let s = (short as f64 * long as f64 / long_in as f64).round() as usize;
            s.clamp(MIN_SIDE, self.target_short_side)
        };
        if width >= height {
            (long, short_of(height, width))
        } else {
            (short_of(width, height), long)
        }
    }
}

/// The four per-frame feature planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub rg: Plane,
    pub by: Plane,
    pub intensity: Plane,
    pub motion: Plane,
}

impl ChannelSet {
    pub fn dims(&self) -> (usize, usize) {
        self.rg.dims()
    }

    pub fn planes(&self) -> [&Plane; 4] {
        [&self.rg, &self.by, &self.intensity, &self.motion]
    }
}

/// Source taps `(index, weight)` for each output sample when mapping `n_in`
/// samples onto `n_out` by area averaging.
fn area_taps(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let step = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|i| {
            let lo = i as f64 * step;
            let hi = lo + step;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n_in);
            let mut taps: Vec<(usize, f64)> = (first..last)
                .filter_map(|j| {
                    let overlap = (hi.min(j as f64 + 1.0) - lo.max(j as f64)).max(0.0);
                    (overlap > 0.0).then_some((j, overlap))
                })
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

/// Resamples a frame to the working resolution with area (box) averaging.
pub fn resize_frame(frame: &Frame, config: &ChannelConfig) -> Result<Frame> {
    config.validate()?;
    if frame.width == 0 || frame.height == 0 {
        return Err(Error::InvalidInput("cannot resize an empty frame".into()));
    }
    let (out_w, out_h) = config.working_dims(frame.width, frame.height);
    if (out_w, out_h) == (frame.width, frame.height) {
        return Ok(frame.clone());
    }

    let x_taps = area_taps(frame.width, out_w);
    let y_taps = area_taps(frame.height, out_h);

    // Horizontal pass, then vertical.
    let mut rows = vec![[0.0f64; 3]; out_w * frame.height];
    for y in 0..frame.height {
        for (ox, taps) in x_taps.iter().enumerate() {
            let mut acc = [0.0; 3];
            for &(sx, w) in taps {
                let p = frame.pixel(sx, y);
                for c in 0..3 {
                    acc[c] += w * p[c];
                }
            }
            rows[y * out_w + ox] = acc;
        }
    }
    let mut out = vec![[0.0f64; 3]; out_w * out_h];
    for (oy, taps) in y_taps.iter().enumerate() {
        for ox in 0..out_w {
            let mut acc = [0.0; 3];
            for &(sy, w) in taps {
                let p = rows[sy * out_w + ox];
                for c in 0..3 {
                    acc[c] += w * p[c];
                }
            }
            out[oy * out_w + ox] = acc.map(|c| c.clamp(0.0, 1.0));
        }
    }
    Frame::new(out_w, out_h, out, frame.index)
}

/// Broadly tuned color responses `(R, G, B, Y)` of one pixel. Negative
/// responses are kept.
#[inline]
pub fn tuned_colors([r, g, b]: [f64; 3]) -> (f64, f64, f64, f64) {
    let big_r = r - (g + b) / 2.0;
    let big_g = g - (r + b) / 2.0;
    let big_b = b - (r + g) / 2.0;
    let big_y = (r + g) / 2.0 - (r - g).abs() / 2.0 - b;
    (big_r, big_g, big_b, big_y)
}

#[inline]
pub fn intensity_of([r, g, b]: [f64; 3]) -> f64 {
    (r + g + b) / 3.0
}

/// Splits a working-resolution frame into its four feature channels.
///
/// `previous_intensity` is the intensity plane of frame `t - tau`; when it is
/// absent the motion plane is all zeros.
pub fn decompose(frame: &Frame, previous_intensity: Option<&Plane>) -> Result<ChannelSet> {
    let (w, h) = (frame.width, frame.height);
    if let Some(prev) = previous_intensity {
        if prev.dims() != (w, h) {
            return Err(Error::InvalidInput(format!(
                "previous intensity is {}x{}, frame is {w}x{h}",
                prev.width(),
                prev.height()
            )));
        }
    }

    let n = w * h;
    let mut rg = Vec::with_capacity(n);
    let mut by = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for &p in &frame.pixels {
        let (big_r, big_g, big_b, big_y) = tuned_colors(p);
        rg.push(big_r - big_g);
        by.push(big_b - big_y);
        intensity.push(intensity_of(p));
    }
    let motion = match previous_intensity {
        Some(prev) => intensity
            .iter()
            .zip(prev.data())
            .map(|(a, b)| (a - b).abs())
            .collect(),
        None => vec![0.0; n],
    };

    Ok(ChannelSet {
        rg: Plane::from_vec(w, h, rg)?,
        by: Plane::from_vec(w, h, by)?,
        intensity: Plane::from_vec(w, h, intensity)?,
        motion: Plane::from_vec(w, h, motion)?,
    })
}
