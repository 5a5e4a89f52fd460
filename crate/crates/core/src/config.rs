//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every tunable has a
//! key; unknown keys and malformed values are errors naming the key.

use serde::{Deserialize, Serialize};

use crate::channels::ChannelConfig;
use crate::error::{Error, Result};
use crate::ior::IorConfig;
use crate::spectral::FusionConfig;
use crate::tracker::MatchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub channels: ChannelConfig,
    pub fusion: FusionConfig,
    pub ior: IorConfig,
    pub matching: MatchConfig,
    pub memory_capacity: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            channels: ChannelConfig::default(),
            fusion: FusionConfig::default(),
            ior: IorConfig::default(),
            matching: MatchConfig::default(),
            memory_capacity: 1000,
        }
    }
}

pub const KEYS: &[&str] = &[
    "tau",
    "target_long_side",
    "target_short_side",
    "weight_rg",
    "weight_by",
    "weight_i",
    "weight_m",
    "disk_radius",
    "alpha_far",
    "alpha_near",
    "max_regions",
    "max_region_px",
    "min_peak_fraction",
    "eta",
    "mu_far",
    "mu_near",
    "channel_weights",
    "color_weight",
    "position_weight",
    "decision_threshold",
    "epsilon_far",
    "epsilon_near",
    "memory_capacity",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{}`", value.trim())))
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "tau" => self.channels.latency_tau = num(key, value)?,
            "target_long_side" => self.channels.target_long_side = num(key, value)?,
            "target_short_side" => self.channels.target_short_side = num(key, value)?,
            "weight_rg" => self.fusion.weight_rg = num(key, value)?,
            "weight_by" => self.fusion.weight_by = num(key, value)?,
            "weight_i" => self.fusion.weight_i = num(key, value)?,
            "weight_m" => self.fusion.weight_m = num(key, value)?,
            "disk_radius" => self.fusion.disk_radius = num(key, value)?,
            "alpha_far" => self.ior.alpha_far = num(key, value)?,
            "alpha_near" => self.ior.alpha_near = num(key, value)?,
            "max_regions" => self.ior.max_regions = num(key, value)?,
            "max_region_px" => self.ior.max_region_px = num(key, value)?,
            "min_peak_fraction" => self.ior.min_peak_fraction = num(key, value)?,
            "eta" => self.matching.eta = num(key, value)?,
            "mu_far" => self.matching.mu_far = num(key, value)?,
            "mu_near" => self.matching.mu_near = num(key, value)?,
            "channel_weights" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 4 {
                    return Err(Error::config(key, "expected four comma-separated weights"));
                }
                for (slot, part) in self.matching.channel_weights.iter_mut().zip(parts) {
                    *slot = num(key, part)?;
                }
            }
            "color_weight" => self.matching.color_weight = num(key, value)?,
            "position_weight" => self.matching.position_weight = num(key, value)?,
            "decision_threshold" => self.matching.decision_threshold = num(key, value)?,
            "epsilon_far" => self.matching.epsilon_far = num(key, value)?,
            "epsilon_near" => self.matching.epsilon_near = num(key, value)?,
            "memory_capacity" => self.memory_capacity = num(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    line,
                    format!("line {} is not `key = value`", n + 1),
                ));
            };
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.channels.validate()?;
        self.fusion.validate()?;
        self.ior.validate()?;
        self.matching.validate()?;
        if self.memory_capacity == 0 {
            return Err(Error::config("memory_capacity", "must be positive"));
        }
        Ok(())
    }

    /// Renders the configuration in the same flat format.
    pub fn to_text(&self) -> String {
        let c = &self.matching;
        let w = c.channel_weights;
        let values: Vec<String> = vec![
            self.channels.latency_tau.to_string(),
            self.channels.target_long_side.to_string(),
            self.channels.target_short_side.to_string(),
            self.fusion.weight_rg.to_string(),
            self.fusion.weight_by.to_string(),
            self.fusion.weight_i.to_string(),
            self.fusion.weight_m.to_string(),
            self.fusion.disk_radius.to_string(),
            self.ior.alpha_far.to_string(),
            self.ior.alpha_near.to_string(),
            self.ior.max_regions.to_string(),
            self.ior.max_region_px.to_string(),
            self.ior.min_peak_fraction.to_string(),
            c.eta.to_string(),
            c.mu_far.to_string(),
            c.mu_near.to_string(),
            format!("{},{},{},{}", w[0], w[1], w[2], w[3]),
            c.color_weight.to_string(),
            c.position_weight.to_string(),
            c.decision_threshold.to_string(),
            c.epsilon_far.to_string(),
            c.epsilon_near.to_string(),
            self.memory_capacity.to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn every_key_is_settable() {
        let text = PipelineConfig::default().to_text();
        assert_eq!(text.lines().count(), KEYS.len());
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = PipelineConfig::parse(
            "# tuned\nmax_regions = 2\n\nchannel_weights = 1, 2, 3, 4\nalpha_far=0.7\n",
        )
        .unwrap();
        assert_eq!(cfg.ior.max_regions, 2);
        assert_eq!(cfg.ior.alpha_far, 0.7);
        assert_eq!(cfg.matching.channel_weights, [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn errors_name_the_key() {
        let err = PipelineConfig::parse("bogus = 1").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref key, .. } if key == "bogus"));
        let err = PipelineConfig::parse("eta = abc").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref key, .. } if key == "eta"));
        let err = PipelineConfig::parse("tau = 0").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref key, .. } if key == "tau"));
        assert!(err.to_string().contains("tau"));
    }
}
