//! Per-frame driver: resize, channels, saliency, region extraction,
//! description, matching and update, in strict frame order.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use crate::channels::{decompose, resize_frame, Frame};
use crate::config::PipelineConfig;
use crate::descriptors::{describe, RegionDescriptor};
use crate::error::Result;
use crate::ior::{extract_regions, Region};
use crate::metrics::MatchObservation;
use crate::plane::Plane;
use crate::spectral::{SaliencyEngine, SaliencyMap};
use crate::tracker::{assign, update, Assignment, SuspicionEvent, TrackMemory};

/// Everything produced for one frame.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub frame: Frame,
    pub saliency: SaliencyMap,
    pub regions: Vec<Region>,
    pub assignments: Vec<Assignment>,
    pub events: Vec<SuspicionEvent>,
    /// Channels, saliency and region extraction.
    pub bottom_up: Duration,
    pub total: Duration,
}

impl FrameOutput {
    pub fn descriptors(&self) -> impl Iterator<Item = &RegionDescriptor> {
        self.assignments.iter().map(|a| &a.descriptor)
    }

    pub fn kept_area(&self) -> usize {
        self.regions.iter().map(Region::size).sum()
    }

    /// Matches to existing tracks, for scoring.
    pub fn matches(&self) -> Vec<MatchObservation> {
        self.assignments
            .iter()
            .filter_map(|a| {
                a.prior.map(|prior| MatchObservation {
                    frame_index: a.descriptor.frame_index,
                    center: a.descriptor.center,
                    prior,
                })
            })
            .collect()
    }

    /// Region boxes of tracks flagged on this frame.
    pub fn suspicious_boxes(&self) -> Vec<(f64, f64, f64, f64)> {
        self.events
            .iter()
            .filter_map(|e| {
                self.regions
                    .iter()
                    .find(|r| r.center == e.center)
                    .map(|r| {
                        let (x0, y0, x1, y1) = r.bbox;
                        (x0 as f64, y0 as f64, x1 as f64, y1 as f64)
                    })
            })
            .collect()
    }
}

pub struct Pipeline {
    config: PipelineConfig,
    engine: SaliencyEngine,
    memory: TrackMemory,
    history: VecDeque<Plane>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            engine: SaliencyEngine::new(config.fusion)?,
            memory: TrackMemory::new(config.memory_capacity)?,
            history: VecDeque::with_capacity(config.channels.latency_tau + 1),
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn memory(&self) -> &TrackMemory {
        &self.memory
    }

    /// Runs the bottom-up half only: working frame, saliency and regions.
    pub fn attend(&mut self, frame: &Frame) -> Result<(Frame, SaliencyMap, Vec<Region>)> {
        let working = resize_frame(frame, &self.config.channels)?;
        let dims = (working.width(), working.height());
        if self.history.back().is_some_and(|p| p.dims() != dims) {
            self.history.clear();
        }
        let tau = self.config.channels.latency_tau;
        let previous = (self.history.len() == tau).then(|| &self.history[0]);
        let channels = decompose(&working, previous)?;
        let saliency = self.engine.saliency(&channels, working.index)?;
        let regions = extract_regions(&saliency, &self.config.ior);

        if self.history.len() == tau {
            self.history.pop_front();
        }
        self.history.push_back(channels.intensity);
        Ok((working, saliency, regions))
    }

    pub fn process(&mut self, frame: &Frame) -> Result<FrameOutput> {
        let start = Instant::now();
        let (working, saliency, regions) = self.attend(frame)?;
        let bottom_up = start.elapsed();

        let descriptors = regions
            .iter()
            .map(|r| describe(r, &working))
            .collect::<Result<Vec<_>>>()?;
        let assignments = assign(&descriptors, &self.memory, &self.config.matching);
        let events = update(
            &mut self.memory,
            &assignments,
            working.index,
            &self.config.matching,
        )?;
        let total = start.elapsed();

        Ok(FrameOutput {
            frame: working,
            saliency,
            regions,
            assignments,
            events,
            bottom_up,
            total,
        })
    }
}
