//! Phase-only Fourier saliency per channel and weighted fusion into a single
//! smoothed, max-normalized saliency map.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channels::ChannelSet;
use crate::error::{Error, Result};
use crate::plane::Plane;

/// Spectral bins with amplitude below this are given phase 0.
pub const ZERO_AMPLITUDE: f64 = 1e-12;

/// Channels whose value range is within this are treated as carrying no
/// spatial information and left out of the fused map.
pub const FLAT_CHANNEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub weight_rg: f64,
    pub weight_by: f64,
    pub weight_i: f64,
    pub weight_m: f64,
    pub disk_radius: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            weight_rg: 1.0,
            weight_by: 1.0,
            weight_i: 1.0,
            weight_m: 2.0,
            disk_radius: 3,
        }
    }
}

impl FusionConfig {
    pub fn weights(&self) -> [f64; 4] {
        [self.weight_rg, self.weight_by, self.weight_i, self.weight_m]
    }

    pub fn validate(&self) -> Result<()> {
        let names = ["weight_rg", "weight_by", "weight_i", "weight_m"];
        for (name, w) in names.iter().zip(self.weights()) {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::config(*name, "must be a nonnegative number"));
            }
        }
        if self.weights().iter().all(|&w| w == 0.0) {
            return Err(Error::config("weight_m", "all channel weights are zero"));
        }
        if self.disk_radius < 1 {
            return Err(Error::config("disk_radius", "must be at least 1"));
        }
        Ok(())
    }
}

/// Fused conspicuity map, normalized so its maximum is 1 (or all zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub values: Plane,
    pub frame_index: u64,
}

impl SaliencyMap {
    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    /// 8-bit grayscale rendering, `value * 255` rounded.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.values
            .data()
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Reusable FFT plans for one plane size.
pub struct PftPlan {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    tbuf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl PftPlan {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(width);
        let row_inv = planner.plan_fft_inverse(width);
        let col_fwd = planner.plan_fft_forward(height);
        let col_inv = planner.plan_fft_inverse(height);
        let scratch_len = [&row_fwd, &row_inv, &col_fwd, &col_inv]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let n = width * height;
        PftPlan {
            width,
            height,
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
            buf: vec![Complex::default(); n],
            tbuf: vec![Complex::default(); n],
            scratch: vec![Complex::default(); scratch_len],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Squared magnitude of the inverse transform of the unit-amplitude
    /// phase spectrum of `channel`.
    pub fn apply(&mut self, channel: &Plane) -> Result<Plane> {
        let (w, h) = (self.width, self.height);
        if channel.dims() != (w, h) {
            return Err(Error::InvalidInput(format!(
                "plan is for {w}x{h}, plane is {}x{}",
                channel.width(),
                channel.height()
            )));
        }

        for (c, &v) in self.buf.iter_mut().zip(channel.data()) {
            *c = Complex::new(v, 0.0);
        }
        for row in self.buf.chunks_exact_mut(w) {
            self.row_fwd.process_with_scratch(row, &mut self.scratch);
        }
        transpose(&self.buf, &mut self.tbuf, w, h);
        for col in self.tbuf.chunks_exact_mut(h) {
            self.col_fwd.process_with_scratch(col, &mut self.scratch);
        }

        for c in self.tbuf.iter_mut() {
            let amp = c.norm();
            *c = if amp < ZERO_AMPLITUDE {
                Complex::new(1.0, 0.0)
            } else {
                *c / amp
            };
        }

        for col in self.tbuf.chunks_exact_mut(h) {
            self.col_inv.process_with_scratch(col, &mut self.scratch);
        }
        transpose(&self.tbuf, &mut self.buf, h, w);
        for row in self.buf.chunks_exact_mut(w) {
            self.row_inv.process_with_scratch(row, &mut self.scratch);
        }

        let norm = 1.0 / (w * h) as f64;
        let out = self
            .buf
            .iter()
            .map(|c| (c * norm).norm_sqr())
            .collect();
        Plane::from_vec(w, h, out)
    }
}

/// `src` is `rows` rows of `cols` values; `dst` receives `cols` rows of `rows`.
fn transpose(src: &[Complex<f64>], dst: &mut [Complex<f64>], cols: usize, rows: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Phase-only Fourier saliency of a single plane.
pub fn pft(channel: &Plane) -> Result<Plane> {
    if channel.width() < 2 || channel.height() < 2 {
        return Err(Error::InvalidInput(format!(
            "pft needs at least 2x2, got {}x{}",
            channel.width(),
            channel.height()
        )));
    }
    PftPlan::new(channel.width(), channel.height()).apply(channel)
}

/// Uniform disk kernel offsets for `radius`, i.e. all `(dx, dy)` with
/// `dx² + dy² <= radius²`.
pub fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut taps = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                taps.push((dx, dy));
            }
        }
    }
    taps
}

/// Same-size mean over a disk, edges replicated.
pub fn disk_filter(plane: &Plane, radius: usize) -> Plane {
    let (w, h) = plane.dims();
    let taps = disk_offsets(radius);
    let k = 1.0 / taps.len() as f64;
    Plane::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for &(dx, dy) in &taps {
            let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
            let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
            acc += plane.get(sx, sy);
        }
        acc * k
    })
}

/// Stateful saliency computation that keeps FFT plans between frames.
pub struct SaliencyEngine {
    config: FusionConfig,
    plan: Option<PftPlan>,
}

impl SaliencyEngine {
    pub fn new(config: FusionConfig) -> Result<Self> {
        config.validate()?;
        Ok(SaliencyEngine { config, plan: None })
    }

    pub fn config(&self) -> &FusionConfig {
        &self.config
    }

    fn plan_for(&mut self, dims: (usize, usize)) -> Result<&mut PftPlan> {
        if dims.0 < 2 || dims.1 < 2 {
            return Err(Error::InvalidInput(format!(
                "pft needs at least 2x2, got {}x{}",
                dims.0, dims.1
            )));
        }
        if self.plan.as_ref().map(PftPlan::dims) != Some(dims) {
            self.plan = Some(PftPlan::new(dims.0, dims.1));
        }
        Ok(self.plan.as_mut().expect("plan initialized above"))
    }

    /// Weighted sum of the per-channel phase saliency, before smoothing.
    pub fn weighted_sum(&mut self, channels: &ChannelSet) -> Result<Plane> {
        let dims = channels.dims();
        if channels.planes().iter().any(|p| p.dims() != dims) {
            return Err(Error::InvalidInput(
                "channel planes differ in size".to_string(),
            ));
        }
        let weights = self.config.weights();
        let plan = self.plan_for(dims)?;
        let mut sum = Plane::zeros(dims.0, dims.1);
        for (plane, weight) in channels.planes().into_iter().zip(weights) {
            // A flat plane reconstructs to a lone spike at the origin.
            if weight == 0.0 || plane.is_constant(FLAT_CHANNEL_TOL) {
                continue;
            }
            sum.add_scaled(&plan.apply(plane)?, weight);
        }
        Ok(sum)
    }

    pub fn saliency(&mut self, channels: &ChannelSet, frame_index: u64) -> Result<SaliencyMap> {
        let sum = self.weighted_sum(channels)?;
        let mut values = disk_filter(&sum, self.config.disk_radius);
        let max = values.max();
        if max > 0.0 {
            values.scale(1.0 / max);
        }
        Ok(SaliencyMap {
            values,
            frame_index,
        })
    }
}

/// Fuses the four channels into a normalized saliency map.
pub fn fuse(channels: &ChannelSet, config: &FusionConfig, frame_index: u64) -> Result<SaliencyMap> {
    SaliencyEngine::new(*config)?.saliency(channels, frame_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_is_a_fixed_point() {
        let mut p = Plane::zeros(12, 9);
        p.set(5, 7, 1.0);
        let out = pft(&p).unwrap();
        for y in 0..9 {
            for x in 0..12 {
                let expect = if (x, y) == (5, 7) { 1.0 } else { 0.0 };
                assert!((out.get(x, y) - expect).abs() < 1e-12, "({x},{y})");
            }
        }
    }

    #[test]
    fn constant_plane_maps_to_origin_spike() {
        let out = pft(&Plane::filled(10, 6, 0.4)).unwrap();
        assert!((out.get(0, 0) - 1.0).abs() < 1e-12);
        let rest: f64 = out.data()[1..].iter().sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn pft_rejects_degenerate_planes() {
        assert!(pft(&Plane::zeros(1, 5)).is_err());
    }

    #[test]
    fn disk_of_radius_three_has_29_taps() {
        assert_eq!(disk_offsets(3).len(), 29);
        assert_eq!(disk_offsets(1).len(), 5);
    }

    #[test]
    fn disk_filter_preserves_constants() {
        let p = Plane::filled(9, 9, 0.25);
        let f = disk_filter(&p, 3);
        assert!(f.data().iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn zero_weights_are_rejected() {
        let cfg = FusionConfig {
            weight_rg: 0.0,
            weight_by: 0.0,
            weight_i: 0.0,
            weight_m: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidConfig { .. })
        ));
    }

    #[test]
    fn flat_channels_give_all_zero_map() {
        let flat = Plane::filled(16, 16, 0.5);
        let set = ChannelSet {
            rg: flat.clone(),
            by: flat.clone(),
            intensity: flat.clone(),
            motion: Plane::zeros(16, 16),
        };
        let map = fuse(&set, &FusionConfig::default(), 0).unwrap();
        assert!(map.values.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gray8_rounds() {
        let map = SaliencyMap {
            values: Plane::from_vec(2, 1, vec![1.0, 0.5]).unwrap(),
            frame_index: 0,
        };
        assert_eq!(map.to_gray8(), vec![255, 128]);
    }
}
