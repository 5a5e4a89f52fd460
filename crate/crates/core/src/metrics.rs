//! Evaluation against ground truth: match score, false-alert rate, jump
//! recall, salient-area coverage and per-frame timing.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::tracker::{Point, PriorSighting, SuspicionEvent};

pub type ObjectId = u32;

/// Axis-aligned object box, inclusive bounds in working-frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthBox {
    pub id: ObjectId,
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl TruthBox {
    pub fn contains(&self, (x, y): Point) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x).max(0.0) * (self.max_y - self.min_y).max(0.0)
    }

    pub fn dilated(&self, by: f64) -> TruthBox {
        TruthBox {
            min_x: self.min_x - by,
            min_y: self.min_y - by,
            max_x: self.max_x + by,
            max_y: self.max_y + by,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TruthFrame {
    pub index: u64,
    pub objects: Vec<TruthBox>,
    /// Objects that are truly suspicious at this frame.
    pub suspicious: Vec<ObjectId>,
}

/// A scripted speed jump of one object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthJump {
    pub object_id: ObjectId,
    pub frame: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<TruthFrame>,
    pub jumps: Vec<TruthJump>,
}

impl GroundTruth {
    pub fn frame(&self, index: u64) -> Option<&TruthFrame> {
        // frames are normally stored densely from 0
        match self.frames.get(index as usize) {
            Some(f) if f.index == index => Some(f),
            _ => self.frames.iter().find(|f| f.index == index),
        }
    }

    /// Object whose box contains `center`; the smallest box wins, then the
    /// smallest id.
    pub fn attribute(&self, frame: u64, center: Point) -> Option<ObjectId> {
        self.frame(frame)?
            .objects
            .iter()
            .filter(|b| b.contains(center))
            .min_by(|a, b| a.area().total_cmp(&b.area()).then(a.id.cmp(&b.id)))
            .map(|b| b.id)
    }

    /// Maps boxes onto a `width` x `height` resampling of the same frames.
    pub fn rescaled(&self, width: usize, height: usize) -> GroundTruth {
        if (width, height) == (self.width, self.height) || self.width == 0 || self.height == 0 {
            return self.clone();
        }
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        // pixel centers sit at integer coordinates
        let mx = |v: f64| (v + 0.5) * sx - 0.5;
        let my = |v: f64| (v + 0.5) * sy - 0.5;
        let mut out = self.clone();
        out.width = width;
        out.height = height;
        for f in &mut out.frames {
            for b in &mut f.objects {
                b.min_x = mx(b.min_x);
                b.max_x = mx(b.max_x);
                b.min_y = my(b.min_y);
                b.max_y = my(b.max_y);
            }
        }
        out
    }

    pub fn is_suspicious(&self, frame: u64, id: ObjectId) -> bool {
        self.frame(frame)
            .is_some_and(|f| f.suspicious.contains(&id))
    }

    pub fn suspicious_frame_count(&self) -> usize {
        self.frames.iter().filter(|f| !f.suspicious.is_empty()).count()
    }

    /// Frame-to-frame continuations of truth objects: one per object per
    /// frame after its first appearance.
    pub fn match_opportunities(&self) -> usize {
        let mut seen = std::collections::BTreeSet::new();
        let mut n = 0;
        for f in &self.frames {
            for b in &f.objects {
                if !seen.insert(b.id) {
                    n += 1;
                }
            }
        }
        n
    }
}

/// A descriptor matched to an existing track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchObservation {
    pub frame_index: u64,
    pub center: Point,
    pub prior: PriorSighting,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchTally {
    pub true_matches: usize,
    pub false_matches: usize,
}

impl MatchTally {
    /// True fraction, or `None` when nothing was matched.
    pub fn score(&self) -> Option<f64> {
        let total = self.true_matches + self.false_matches;
        (total > 0).then(|| self.true_matches as f64 / total as f64)
    }

    pub fn add(&mut self, truth: &GroundTruth, m: &MatchObservation) {
        if is_true_match(truth, m) {
            self.true_matches += 1;
        } else {
            self.false_matches += 1;
        }
    }
}

/// A match is true when both ends attribute to the same truth object.
pub fn is_true_match(truth: &GroundTruth, m: &MatchObservation) -> bool {
    let now = truth.attribute(m.frame_index, m.center);
    let before = truth.attribute(m.prior.frame_index, m.prior.center);
    matches!((now, before), (Some(a), Some(b)) if a == b)
}

pub fn score_matches<'a>(
    matches: impl IntoIterator<Item = &'a MatchObservation>,
    truth: &GroundTruth,
) -> MatchTally {
    let mut tally = MatchTally::default();
    for m in matches {
        tally.add(truth, m);
    }
    tally
}

/// A flagged event is false unless it lands on an object labeled suspicious
/// at that frame.
pub fn is_false_alert(truth: &GroundTruth, e: &SuspicionEvent) -> bool {
    match truth.attribute(e.frame_index, e.center) {
        Some(id) => !truth.is_suspicious(e.frame_index, id),
        None => true,
    }
}

/// `(false alerts, false-alert rate)`; the rate is 0 when nothing was flagged.
pub fn false_alert<'a>(
    events: impl IntoIterator<Item = &'a SuspicionEvent>,
    truth: &GroundTruth,
) -> (usize, f64) {
    let mut flagged = 0;
    let mut wrong = 0;
    for e in events {
        flagged += 1;
        if is_false_alert(truth, e) {
            wrong += 1;
        }
    }
    (wrong, alert_rate(wrong, flagged))
}

pub fn alert_rate(n_false: usize, n_flagged: usize) -> f64 {
    if n_flagged == 0 {
        0.0
    } else {
        n_false as f64 / n_flagged as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JumpRecall {
    pub jumps: usize,
    pub detected: usize,
}

impl JumpRecall {
    pub fn rate(&self) -> Option<f64> {
        (self.jumps > 0).then(|| self.detected as f64 / self.jumps as f64)
    }
}

/// Counts jumps that have an event on the jumping object within `window`
/// frames after the jump.
pub fn suspicion_recall<'a>(
    events: impl IntoIterator<Item = &'a SuspicionEvent>,
    truth: &GroundTruth,
    window: u64,
) -> JumpRecall {
    let events: Vec<&SuspicionEvent> = events.into_iter().collect();
    let detected = truth
        .jumps
        .iter()
        .filter(|j| {
            events.iter().any(|e| {
                e.frame_index >= j.frame
                    && e.frame_index <= j.frame + window
                    && truth.attribute(e.frame_index, e.center) == Some(j.object_id)
            })
        })
        .count();
    JumpRecall {
        jumps: truth.jumps.len(),
        detected,
    }
}

/// Mean over frames of kept-region area divided by frame area.
pub fn coverage(region_area_per_frame: &[usize], frame_area: usize) -> f64 {
    if region_area_per_frame.is_empty() || frame_area == 0 {
        return 0.0;
    }
    let sum: f64 = region_area_per_frame
        .iter()
        .map(|&a| a as f64 / frame_area as f64)
        .sum();
    sum / region_area_per_frame.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub frames: usize,
    pub true_matches: usize,
    pub false_matches: usize,
    pub match_score: Option<f64>,
    pub match_opportunities: usize,
    pub n_suspicious_flagged: usize,
    pub n_false_alerts: usize,
    pub false_alert_rate: f64,
    pub jumps: usize,
    pub jumps_detected: usize,
    pub mean_bottom_up_ms: f64,
    pub mean_total_ms: f64,
    pub mean_region_coverage: f64,
    /// Mean kept-region area per frame, in pixels.
    pub mean_region_area: f64,
}

/// Streaming accumulator for an [`EvalReport`].
#[derive(Debug, Clone)]
pub struct Evaluator<'t> {
    truth: Option<&'t GroundTruth>,
    tally: MatchTally,
    flagged: usize,
    false_alerts: usize,
    events: Vec<SuspicionEvent>,
    coverage_sum: f64,
    area_sum: usize,
    bottom_up: Duration,
    total: Duration,
    frames: usize,
}

/// Recall window for jumps, in frames.
pub const JUMP_WINDOW: u64 = 2;

impl<'t> Evaluator<'t> {
    pub fn new(truth: Option<&'t GroundTruth>) -> Self {
        Evaluator {
            truth,
            tally: MatchTally::default(),
            flagged: 0,
            false_alerts: 0,
            events: Vec::new(),
            coverage_sum: 0.0,
            area_sum: 0,
            bottom_up: Duration::ZERO,
            total: Duration::ZERO,
            frames: 0,
        }
    }

    pub fn record_frame(
        &mut self,
        frame_area: usize,
        kept_area: usize,
        matches: &[MatchObservation],
        events: &[SuspicionEvent],
        bottom_up: Duration,
        total: Duration,
    ) {
        self.frames += 1;
        if frame_area > 0 {
            self.coverage_sum += kept_area as f64 / frame_area as f64;
        }
        self.area_sum += kept_area;
        self.bottom_up += bottom_up;
        self.total += total;
        self.flagged += events.len();
        if let Some(truth) = self.truth {
            for m in matches {
                self.tally.add(truth, m);
            }
            self.false_alerts += events.iter().filter(|e| is_false_alert(truth, e)).count();
            // only events near a scripted jump can count toward recall
            self.events.extend(events.iter().filter(|e| {
                truth
                    .jumps
                    .iter()
                    .any(|j| e.frame_index >= j.frame && e.frame_index <= j.frame + JUMP_WINDOW)
            }).cloned());
        }
    }

    pub fn finish(&self) -> EvalReport {
        let n = self.frames.max(1) as f64;
        let recall = self
            .truth
            .map(|t| suspicion_recall(&self.events, t, JUMP_WINDOW))
            .unwrap_or_default();
        EvalReport {
            frames: self.frames,
            true_matches: self.tally.true_matches,
            false_matches: self.tally.false_matches,
            match_score: self.tally.score(),
            match_opportunities: self.truth.map_or(0, GroundTruth::match_opportunities),
            n_suspicious_flagged: self.flagged,
            n_false_alerts: self.false_alerts,
            false_alert_rate: alert_rate(self.false_alerts, self.flagged),
            jumps: recall.jumps,
            jumps_detected: recall.detected,
            mean_bottom_up_ms: self.bottom_up.as_secs_f64() * 1e3 / n,
            mean_total_ms: self.total.as_secs_f64() * 1e3 / n,
            mean_region_coverage: self.coverage_sum / n,
            mean_region_area: self.area_sum as f64 / n,
        }
    }
}
