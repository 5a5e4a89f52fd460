//! Inhibition of return: repeatedly pick the most salient point, grow the
//! 8-connected area around it whose values stay within a relative band of
//! the peak, suppress that area, and continue.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::spectral::SaliencyMap;

/// Working-frame area at which `max_region_px` is specified (64 x 86).
pub const REFERENCE_AREA: usize = 64 * 86;

/// Object candidate area extracted from a saliency map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub pixels: Vec<(usize, usize)>,
    pub peak: (usize, usize),
    pub peak_value: f64,
    /// Band threshold used when growing, relative to `peak_value`.
    pub alpha: f64,
    /// `(min_x, min_y, max_x, max_y)`, inclusive.
    pub bbox: (usize, usize, usize, usize),
    pub center: (f64, f64),
}

impl Region {
    pub fn size(&self) -> usize {
        self.pixels.len()
    }

    pub(crate) fn from_pixels(
        pixels: Vec<(usize, usize)>,
        peak: (usize, usize),
        peak_value: f64,
        alpha: f64,
    ) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (peak.0, peak.1, peak.0, peak.1);
        for &(x, y) in &pixels {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        Region {
            pixels,
            peak,
            peak_value,
            alpha,
            bbox: (x0, y0, x1, y1),
            center: ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IorConfig {
    /// Band threshold at the top row.
    pub alpha_far: f64,
    /// Band threshold at the bottom row.
    pub alpha_near: f64,
    pub max_regions: usize,
    /// Largest kept area, in pixels at `reference_area`.
    pub max_region_px: usize,
    /// Stop once the current maximum falls below this fraction of the
    /// frame's original maximum.
    pub min_peak_fraction: f64,
    /// Frame area `max_region_px` refers to; `None` disables rescaling.
    pub reference_area: Option<usize>,
}

impl Default for IorConfig {
    fn default() -> Self {
        IorConfig {
            alpha_far: 0.65,
            alpha_near: 0.45,
            max_regions: 4,
            max_region_px: 300,
            min_peak_fraction: 0.3,
            reference_area: Some(REFERENCE_AREA),
        }
    }
}

impl IorConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.alpha_far) {
            return Err(Error::config("alpha_far", "must lie in (0, 1)"));
        }
        if !open_unit(self.alpha_near) {
            return Err(Error::config("alpha_near", "must lie in (0, 1)"));
        }
        if self.max_regions == 0 {
            return Err(Error::config("max_regions", "must be positive"));
        }
        if self.max_region_px == 0 {
            return Err(Error::config("max_region_px", "must be positive"));
        }
        if !open_unit(self.min_peak_fraction) {
            return Err(Error::config("min_peak_fraction", "must lie in (0, 1)"));
        }
        if self.reference_area == Some(0) {
            return Err(Error::config("reference_area", "must be positive"));
        }
        Ok(())
    }

    /// Size limit for a `width` x `height` map.
    pub fn region_limit(&self, width: usize, height: usize) -> usize {
        match self.reference_area {
            Some(reference) => {
                (self.max_region_px as f64 * (width * height) as f64 / reference as f64).round()
                    as usize
            }
            None => self.max_region_px,
        }
    }
}

/// Band threshold for `row`, interpolated linearly from `alpha_far` at the
/// top row to `alpha_near` at the bottom row.
pub fn alpha_at(row: usize, height: usize, config: &IorConfig) -> f64 {
    if height <= 1 {
        return config.alpha_far;
    }
    let t = row.min(height - 1) as f64 / (height - 1) as f64;
    config.alpha_far + (config.alpha_near - config.alpha_far) * t
}

/// Collects the 8-connected component of `seed` whose values lie in
/// `[lo, hi]`.
pub fn grow(map: &Plane, seed: (usize, usize), lo: f64, hi: f64) -> Vec<(usize, usize)> {
    let (w, h) = map.dims();
    let inside = |x: usize, y: usize| {
        let v = map.get(x, y);
        v >= lo && v <= hi
    };
    if !inside(seed.0, seed.1) {
        return Vec::new();
    }
    let mut seen = vec![false; w * h];
    let mut stack = vec![seed];
    seen[seed.1 * w + seed.0] = true;
    let mut out = Vec::new();
    while let Some((x, y)) = stack.pop() {
        out.push((x, y));
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                let i = ny * w + nx;
                if !seen[i] && inside(nx, ny) {
                    seen[i] = true;
                    stack.push((nx, ny));
                }
            }
        }
    }
    out.sort_unstable_by_key(|&(x, y)| (y, x));
    out
}

/// Extracts up to `max_regions` candidate areas, ordered by decreasing peak.
/// Oversized components are suppressed but not returned and do not count
/// toward the limit.
pub fn extract_regions(map: &SaliencyMap, config: &IorConfig) -> Vec<Region> {
    let mut work = map.values.clone();
    let (w, h) = work.dims();
    let limit = config.region_limit(w, h);
    let floor = config.min_peak_fraction * work.max();
    let mut regions = Vec::new();
    if floor <= 0.0 {
        return regions;
    }

    while regions.len() < config.max_regions {
        let Some(peak) = work.argmax() else { break };
        let peak_value = work.get(peak.0, peak.1);
        if peak_value < floor {
            break;
        }
        let alpha = alpha_at(peak.1, h, config);
        let pixels = grow(&work, peak, alpha * peak_value, peak_value);
        for &(x, y) in &pixels {
            work.set(x, y, 0.0);
        }
        if pixels.len() <= limit {
            regions.push(Region::from_pixels(pixels, peak, peak_value, alpha));
        }
    }
    regions
}
