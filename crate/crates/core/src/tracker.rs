//! Bounded track memory: appearance/position matching of new regions
//! against stored tracks, record update and eviction, and flagging of sudden
//! speed changes.

use serde::{Deserialize, Serialize};

use crate::descriptors::{ColorHistogram, RegionDescriptor, BINS, HIST_CHANNELS};
use crate::error::{Error, Result};

pub type TrackId = u64;
pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub id: TrackId,
    pub histogram: ColorHistogram,
    pub size: usize,
    pub last_center: Point,
    pub prev_center: Option<Point>,
    /// Frame at which `prev_center` was observed.
    pub prev_seen_frame: Option<u64>,
    /// Pixels per frame between the last two observations.
    pub speed: Option<f64>,
    pub appear_count: u64,
    pub last_seen_frame: u64,
    pub first_seen_frame: u64,
}

impl TrackRecord {
    /// Retention score; the lowest-scoring record is forgotten first.
    pub fn del_decision(&self, current_frame: u64) -> f64 {
        let interval = current_frame.saturating_sub(self.last_seen_frame);
        0.8 * self.appear_count as f64 - 0.2 * interval as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Color distance at which the color match reaches zero.
    pub eta: f64,
    /// Position tolerance (squared pixels) at the top of the frame.
    pub mu_far: f64,
    /// Position tolerance (squared pixels) at the bottom of the frame.
    pub mu_near: f64,
    /// Weights of the r, g, b and intensity histogram distances.
    pub channel_weights: [f64; HIST_CHANNELS],
    pub color_weight: f64,
    pub position_weight: f64,
    pub decision_threshold: f64,
    /// Speed-change threshold (px/frame per frame) at the top of the frame.
    pub epsilon_far: f64,
    /// Speed-change threshold (px/frame per frame) at the bottom of the frame.
    pub epsilon_near: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            eta: 0.6,
            // calibrated on the benchmark suite
            mu_far: 200.0,
            mu_near: 300.0,
            channel_weights: [1.0; HIST_CHANNELS],
            color_weight: 0.7,
            position_weight: 0.3,
            decision_threshold: 0.7,
            epsilon_far: 3.0,
            epsilon_near: 3.5,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, "must be a positive number"))
            }
        };
        positive("eta", self.eta)?;
        positive("mu_far", self.mu_far)?;
        positive("mu_near", self.mu_near)?;
        positive("epsilon_far", self.epsilon_far)?;
        positive("epsilon_near", self.epsilon_near)?;
        if self
            .channel_weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(Error::config("channel_weights", "must be nonnegative"));
        }
        for (key, w) in [
            ("color_weight", self.color_weight),
            ("position_weight", self.position_weight),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config(key, "must lie in [0, 1]"));
            }
        }
        if (self.color_weight + self.position_weight - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "position_weight",
                "color_weight + position_weight must equal 1",
            ));
        }
        if !self.decision_threshold.is_finite() {
            return Err(Error::config("decision_threshold", "must be a number"));
        }
        Ok(())
    }

    /// Position tolerance for a row band in `[0, 1]`.
    pub fn mu_at(&self, row_band: f64) -> f64 {
        lerp(self.mu_far, self.mu_near, row_band)
    }

    /// Speed-change threshold for a row band in `[0, 1]`.
    pub fn epsilon_at(&self, row_band: f64) -> f64 {
        lerp(self.epsilon_far, self.epsilon_near, row_band)
    }
}

fn lerp(top: f64, bottom: f64, t: f64) -> f64 {
    top + (bottom - top) * t.clamp(0.0, 1.0)
}

/// Weighted sum over channels of the Euclidean distance between bin vectors.
pub fn color_distance(a: &ColorHistogram, b: &ColorHistogram, config: &MatchConfig) -> f64 {
    a.bins
        .iter()
        .zip(&b.bins)
        .zip(config.channel_weights)
        .map(|((ha, hb), c)| {
            let sq: f64 = (0..BINS).map(|l| (ha[l] - hb[l]).powi(2)).sum();
            c * sq.sqrt()
        })
        .sum()
}

pub fn color_match(a: &ColorHistogram, b: &ColorHistogram, config: &MatchConfig) -> f64 {
    (1.0 - color_distance(a, b, config) / config.eta).clamp(0.0, 1.0)
}

/// Constant-velocity residual: zero when `prev -> last -> current` are
/// equally spaced on a line. Without `prev` this is the plain displacement.
pub fn motion_residual(current: Point, last: Point, prev: Option<Point>) -> Point {
    match prev {
        Some(p) => (
            2.0 * last.0 - p.0 - current.0,
            2.0 * last.1 - p.1 - current.1,
        ),
        None => (last.0 - current.0, last.1 - current.1),
    }
}

pub fn position_match(
    current: Point,
    last: Point,
    prev: Option<Point>,
    row_band: f64,
    config: &MatchConfig,
) -> f64 {
    let (dx, dy) = motion_residual(current, last, prev);
    (1.0 - (dx * dx + dy * dy) / config.mu_at(row_band)).clamp(0.0, 1.0)
}

pub fn decision(color: f64, position: f64, config: &MatchConfig) -> f64 {
    config.color_weight * color + config.position_weight * position
}

/// Matching score of a descriptor against a stored record.
///
/// When observations are not on consecutive frames the stored previous
/// center is rescaled so that constant velocity still gives a zero residual.
pub fn score_against(
    descriptor: &RegionDescriptor,
    record: &TrackRecord,
    config: &MatchConfig,
) -> f64 {
    let cm = color_match(&descriptor.histogram, &record.histogram, config);
    let gap_now = descriptor.frame_index.saturating_sub(record.last_seen_frame).max(1) as f64;
    let prev = match (record.prev_center, record.prev_seen_frame) {
        (Some(p), Some(pf)) => {
            let gap_prev = record.last_seen_frame.saturating_sub(pf).max(1) as f64;
            let k = gap_now / gap_prev;
            let (lx, ly) = record.last_center;
            Some((lx - (lx - p.0) * k, ly - (ly - p.1) * k))
        }
        _ => None,
    };
    let pm = position_match(
        descriptor.center,
        record.last_center,
        prev,
        descriptor.row_band,
        config,
    );
    decision(cm, pm, config)
}

/// Fired when a matched track's speed changes faster than the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspicionEvent {
    pub frame_index: u64,
    pub track_id: TrackId,
    pub delta_speed: f64,
    pub threshold_used: f64,
    pub center: Point,
}

/// Last observation of the track a descriptor was matched to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSighting {
    pub frame_index: u64,
    pub center: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub descriptor: RegionDescriptor,
    /// Matched track, or `None` for a new track.
    pub track: Option<TrackId>,
    pub score: f64,
    pub prior: Option<PriorSighting>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMemory {
    records: Vec<TrackRecord>,
    capacity: usize,
    pub current_frame: u64,
    next_id: TrackId,
}

impl TrackMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("memory_capacity", "must be positive"));
        }
        Ok(TrackMemory {
            records: Vec::new(),
            capacity,
            current_frame: 0,
            next_id: 1,
        })
    }

    pub fn records(&self) -> &[TrackRecord] {
        &self.records
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.records.len() >= self.capacity
    }

    pub fn get(&self, id: TrackId) -> Option<&TrackRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    fn get_mut(&mut self, id: TrackId) -> Option<&mut TrackRecord> {
        self.records.iter_mut().find(|r| r.id == id)
    }

    /// Removes the record with the lowest retention score. Ties go to the
    /// oldest `first_seen_frame`, then the smallest id.
    pub fn evict(&mut self) -> Result<TrackId> {
        if !self.is_full() {
            return Err(Error::InvalidState(format!(
                "evict called with {} of {} records",
                self.records.len(),
                self.capacity
            )));
        }
        let now = self.current_frame;
        let victim = self
            .records
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.del_decision(now)
                    .total_cmp(&b.del_decision(now))
                    .then(a.first_seen_frame.cmp(&b.first_seen_frame))
                    .then(a.id.cmp(&b.id))
            })
            .map(|(i, _)| i)
            .expect("memory is full, hence nonempty");
        Ok(self.records.swap_remove(victim).id)
    }

    /// Stores a new track for `descriptor`, evicting first when full.
    pub fn insert(&mut self, descriptor: &RegionDescriptor) -> Result<TrackId> {
        if self.is_full() {
            self.evict()?;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.records.push(TrackRecord {
            id,
            histogram: descriptor.histogram.clone(),
            size: descriptor.size,
            last_center: descriptor.center,
            prev_center: None,
            prev_seen_frame: None,
            speed: None,
            appear_count: 1,
            last_seen_frame: descriptor.frame_index,
            first_seen_frame: descriptor.frame_index,
        });
        Ok(id)
    }
}

/// Greedy best-first matching of one frame's descriptors to stored tracks.
///
/// The result is in input order. Each track is matched at most once; pairs
/// scoring at or below `decision_threshold` are left as new tracks.
pub fn assign(
    descriptors: &[RegionDescriptor],
    memory: &TrackMemory,
    config: &MatchConfig,
) -> Vec<Assignment> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (di, d) in descriptors.iter().enumerate() {
        for (ri, r) in memory.records.iter().enumerate() {
            let s = score_against(d, r, config);
            if s > config.decision_threshold {
                pairs.push((s, di, ri));
            }
        }
    }
    // Ties are broken on content, never on input position.
    let key = |d: &RegionDescriptor| (d.center.1, d.center.0, d.size);
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(memory.records[a.2].id.cmp(&memory.records[b.2].id))
            .then_with(|| {
                let (ka, kb) = (key(&descriptors[a.1]), key(&descriptors[b.1]));
                ka.0.total_cmp(&kb.0)
                    .then(ka.1.total_cmp(&kb.1))
                    .then(ka.2.cmp(&kb.2))
            })
    });

    let mut taken_desc = vec![false; descriptors.len()];
    let mut taken_rec = vec![false; memory.records.len()];
    let mut out: Vec<Assignment> = descriptors
        .iter()
        .map(|d| Assignment {
            descriptor: d.clone(),
            track: None,
            score: 0.0,
            prior: None,
        })
        .collect();
    for (s, di, ri) in pairs {
        if taken_desc[di] || taken_rec[ri] {
            continue;
        }
        taken_desc[di] = true;
        taken_rec[ri] = true;
        let r = &memory.records[ri];
        out[di].track = Some(r.id);
        out[di].score = s;
        out[di].prior = Some(PriorSighting {
            frame_index: r.last_seen_frame,
            center: r.last_center,
        });
    }
    out
}

/// Applies one frame's assignments: refreshes matched tracks, stores new
/// ones, and reports speed discontinuities.
pub fn update(
    memory: &mut TrackMemory,
    assignments: &[Assignment],
    frame_index: u64,
    config: &MatchConfig,
) -> Result<Vec<SuspicionEvent>> {
    memory.current_frame = frame_index;
    let mut events = Vec::new();

    for a in assignments {
        let Some(id) = a.track else { continue };
        let d = &a.descriptor;
        let rec = memory
            .get_mut(id)
            .ok_or_else(|| Error::InvalidState(format!("track {id} is not in memory")))?;
        let gap = frame_index.saturating_sub(rec.last_seen_frame).max(1) as f64;
        let (dx, dy) = (
            d.center.0 - rec.last_center.0,
            d.center.1 - rec.last_center.1,
        );
        let new_speed = (dx * dx + dy * dy).sqrt() / gap;
        if let Some(old_speed) = rec.speed {
            let delta = (new_speed - old_speed).abs() / gap;
            let threshold = config.epsilon_at(d.row_band);
            if delta > threshold {
                events.push(SuspicionEvent {
                    frame_index,
                    track_id: id,
                    delta_speed: delta,
                    threshold_used: threshold,
                    center: d.center,
                });
            }
        }
        rec.histogram = d.histogram.clone();
        rec.size = d.size;
        rec.prev_center = Some(rec.last_center);
        rec.prev_seen_frame = Some(rec.last_seen_frame);
        rec.last_center = d.center;
        rec.speed = Some(new_speed);
        rec.appear_count += 1;
        rec.last_seen_frame = frame_index;
    }

    for a in assignments.iter().filter(|a| a.track.is_none()) {
        memory.insert(&a.descriptor)?;
    }
    Ok(events)
}
