//! Deterministic synthetic surveillance scenes with exact ground truth:
//! soft-edged colored rectangles walking polyline paths over a textured
//! background, with optional scripted speed jumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::Frame;
use crate::error::{Error, Result};
use crate::metrics::{GroundTruth, ObjectId, TruthBox, TruthFrame, TruthJump};

/// Frames labeled suspicious after a jump, in addition to the jump frame.
pub const SUSPICIOUS_TAIL: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub base: [f64; 3],
    /// Amplitude of the static per-pixel texture.
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Amplitude of fresh per-frame sensor noise.
    #[serde(default)]
    pub temporal_noise: f64,
}

fn default_noise() -> f64 {
    0.03
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub color: [f64; 3],
    /// `[width, height]` in pixels.
    pub size: [f64; 2],
    /// Path vertices `[x, y]` of the actor center.
    pub waypoints: Vec<[f64; 2]>,
    /// Pixels per frame on each path segment.
    pub speeds: Vec<f64>,
    /// First frame moving at the multiplied speed.
    #[serde(default)]
    pub jump_frame: Option<u64>,
    #[serde(default = "default_jump_factor")]
    pub jump_factor: f64,
}

fn default_jump_factor() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneScript {
    pub seed: u64,
    pub frame_count: u64,
    pub width: usize,
    pub height: usize,
    pub background: Background,
    /// Minimum largest-channel difference between an actor and the base.
    #[serde(default = "default_min_contrast")]
    pub min_contrast: f64,
    pub actors: Vec<Actor>,
}

fn default_min_contrast() -> f64 {
    0.2
}

impl SceneScript {
    pub fn from_toml(text: &str) -> Result<Self> {
        let script: SceneScript =
            toml::from_str(text).map_err(|e| Error::InvalidScript(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scene scripts always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScript(msg));
        if self.width < 8 || self.height < 8 {
            return bad(format!("frame {}x{} is too small", self.width, self.height));
        }
        if self.frame_count == 0 {
            return bad("frame_count must be positive".into());
        }
        let unit = |c: &[f64; 3]| c.iter().all(|v| (0.0..=1.0).contains(v));
        if !unit(&self.background.base) {
            return bad("background base color outside [0, 1]".into());
        }
        for (name, a) in [
            ("noise", self.background.noise),
            ("temporal_noise", self.background.temporal_noise),
        ] {
            if !(0.0..=0.5).contains(&a) {
                return bad(format!("background {name} {a} outside [0, 0.5]"));
            }
        }
        for (i, actor) in self.actors.iter().enumerate() {
            let id = i + 1;
            if !unit(&actor.color) {
                return bad(format!("actor {id}: color outside [0, 1]"));
            }
            let contrast = actor
                .color
                .iter()
                .zip(&self.background.base)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if contrast < self.min_contrast {
                return bad(format!(
                    "actor {id}: contrast {contrast:.3} below {}",
                    self.min_contrast
                ));
            }
            if actor.size.iter().any(|&s| s < 1.0) {
                return bad(format!("actor {id}: size must be at least 1 px"));
            }
            if actor.waypoints.is_empty() {
                return bad(format!("actor {id}: no waypoints"));
            }
            if actor.waypoints.len() > 1 && actor.speeds.len() != actor.waypoints.len() - 1 {
                return bad(format!(
                    "actor {id}: {} waypoints need {} speeds, got {}",
                    actor.waypoints.len(),
                    actor.waypoints.len() - 1,
                    actor.speeds.len()
                ));
            }
            if actor.speeds.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return bad(format!("actor {id}: negative speed"));
            }
            if !(actor.jump_factor >= 1.0) {
                return bad(format!("actor {id}: jump_factor must be at least 1"));
            }
            let (hw, hh) = (actor.size[0] / 2.0, actor.size[1] / 2.0);
            for &[x, y] in &actor.waypoints {
                if x - hw < -0.5
                    || y - hh < -0.5
                    || x + hw > self.width as f64 - 0.5
                    || y + hh > self.height as f64 - 0.5
                {
                    return bad(format!(
                        "actor {id}: waypoint ({x}, {y}) puts the actor outside the frame"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Centers of one actor for every frame.
fn trajectory(actor: &Actor, frames: u64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(frames as usize);
    let mut seg = 0usize;
    let mut pos = actor.waypoints[0];
    out.push((pos[0], pos[1]));
    for t in 1..frames {
        let mult = match actor.jump_frame {
            Some(j) if t >= j => actor.jump_factor,
            _ => 1.0,
        };
        let mut budget = actor.speeds.get(seg).copied().unwrap_or(0.0) * mult;
        while budget > 0.0 && seg + 1 < actor.waypoints.len() {
            let target = actor.waypoints[seg + 1];
            let (dx, dy) = (target[0] - pos[0], target[1] - pos[1]);
            let dist = (dx * dx + dy * dy).sqrt();
            if dist <= budget {
                pos = target;
                budget -= dist;
                seg += 1;
            } else {
                pos = [pos[0] + dx / dist * budget, pos[1] + dy / dist * budget];
                budget = 0.0;
            }
        }
        out.push((pos[0], pos[1]));
    }
    out
}

/// Length of the overlap of `[a0, a1]` and `[b0, b1]`.
fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Frame-by-frame renderer; frames can be produced in any order.
pub struct SceneRenderer {
    script: SceneScript,
    texture: Vec<f64>,
    paths: Vec<Vec<(f64, f64)>>,
}

impl SceneRenderer {
    pub fn new(script: SceneScript) -> Result<Self> {
        script.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
        let a = script.background.noise;
        let texture = (0..script.width * script.height * 3)
            .map(|_| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 })
            .collect();
        let paths = script
            .actors
            .iter()
            .map(|actor| trajectory(actor, script.frame_count))
            .collect();
        Ok(SceneRenderer {
            script,
            texture,
            paths,
        })
    }

    pub fn script(&self) -> &SceneScript {
        &self.script
    }

    pub fn frame_count(&self) -> u64 {
        self.script.frame_count
    }

    /// Center of actor `id` (1-based) at frame `t`.
    pub fn center(&self, id: ObjectId, t: u64) -> (f64, f64) {
        self.paths[id as usize - 1][t as usize]
    }

    pub fn frame(&self, t: u64) -> Result<Frame> {
        let s = &self.script;
        if t >= s.frame_count {
            return Err(Error::InvalidInput(format!(
                "frame {t} beyond scene length {}",
                s.frame_count
            )));
        }
        let (w, h) = (s.width, s.height);
        let tn = s.background.temporal_noise;
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ (t.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut pixels: Vec<[f64; 3]> = (0..w * h)
            .map(|i| {
                let mut p = [0.0; 3];
                for c in 0..3 {
                    let jitter = if tn > 0.0 { rng.gen_range(-tn..=tn) } else { 0.0 };
                    p[c] = s.background.base[c] + self.texture[i * 3 + c] + jitter;
                }
                p
            })
            .collect();

        for (actor, path) in s.actors.iter().zip(&self.paths) {
            let (cx, cy) = path[t as usize];
            let (x0, x1) = (cx - actor.size[0] / 2.0, cx + actor.size[0] / 2.0);
            let (y0, y1) = (cy - actor.size[1] / 2.0, cy + actor.size[1] / 2.0);
            let px0 = (x0 + 0.5).floor().max(0.0) as usize;
            let px1 = ((x1 + 0.5).ceil() as usize).min(w);
            let py0 = (y0 + 0.5).floor().max(0.0) as usize;
            let py1 = ((y1 + 0.5).ceil() as usize).min(h);
            for y in py0..py1 {
                let cov_y = overlap(y as f64 - 0.5, y as f64 + 0.5, y0, y1);
                for x in px0..px1 {
                    let cov = cov_y * overlap(x as f64 - 0.5, x as f64 + 0.5, x0, x1);
                    if cov <= 0.0 {
                        continue;
                    }
                    let p = &mut pixels[y * w + x];
                    for c in 0..3 {
                        p[c] = p[c] * (1.0 - cov) + actor.color[c] * cov;
                    }
                }
            }
        }
        for p in &mut pixels {
            for c in p.iter_mut() {
                *c = c.clamp(0.0, 1.0);
            }
        }
        Frame::new(w, h, pixels, t)
    }

    pub fn truth(&self) -> GroundTruth {
        let s = &self.script;
        let frames = (0..s.frame_count)
            .map(|t| {
                let mut objects = Vec::new();
                let mut suspicious = Vec::new();
                for (i, (actor, path)) in s.actors.iter().zip(&self.paths).enumerate() {
                    let id = i as ObjectId + 1;
                    let (cx, cy) = path[t as usize];
                    objects.push(TruthBox {
                        id,
                        min_x: cx - actor.size[0] / 2.0,
                        min_y: cy - actor.size[1] / 2.0,
                        max_x: cx + actor.size[0] / 2.0,
                        max_y: cy + actor.size[1] / 2.0,
                    });
                    if let Some(j) = actor.jump_frame {
                        if t >= j && t <= j + SUSPICIOUS_TAIL {
                            suspicious.push(id);
                        }
                    }
                }
                TruthFrame {
                    index: t,
                    objects,
                    suspicious,
                }
            })
            .collect();
        let jumps = s
            .actors
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                a.jump_frame
                    .filter(|&j| j < s.frame_count)
                    .map(|frame| TruthJump {
                        object_id: i as ObjectId + 1,
                        frame,
                    })
            })
            .collect();
        GroundTruth {
            width: s.width,
            height: s.height,
            frames,
            jumps,
        }
    }
}

fn actor(color: [f64; 3], size: [f64; 2], waypoints: Vec<[f64; 2]>, speed: f64) -> Actor {
    let speeds = vec![speed; waypoints.len().saturating_sub(1)];
    Actor {
        color,
        size,
        waypoints,
        speeds,
        jump_frame: None,
        jump_factor: 4.0,
    }
}

fn with_jump(mut a: Actor, frame: u64, factor: f64) -> Actor {
    a.jump_frame = Some(frame);
    a.jump_factor = factor;
    a
}

/// Lane extent used by the benchmark scenes.
const LANE: (f64, f64) = (8.0, 78.0);

/// Waypoints along row `y` for an actor bouncing between the lane ends that,
/// at `speed` px/frame, sits at `end` heading `toward` after `frames` moves.
fn bounce_into(y: f64, speed: f64, frames: u64, end: f64, toward: f64) -> Vec<[f64; 2]> {
    // Walk backwards from `end`, reflecting at the lane ends.
    let mut points = vec![end];
    let mut x = end;
    let mut heading = if toward < end { 1.0 } else { -1.0 };
    let mut left = speed * frames as f64;
    while left > 0.0 {
        let wall = if heading > 0.0 { LANE.1 } else { LANE.0 };
        let room = (wall - x).abs();
        if room >= left {
            x += heading * left;
            left = 0.0;
        } else {
            x = wall;
            left -= room;
            heading = -heading;
        }
        points.push(x);
    }
    points.reverse();
    points.push(toward);
    points.into_iter().map(|x| [x, y]).collect()
}

/// Five working-size scenes used by the evaluation suite.
///
/// Every scene has four actors in separate lanes, so the four attended
/// regions usually land on four different actors. Runners start late
/// enough that they never turn or stop before the scene ends.
pub fn benchmark_suite() -> Vec<SceneScript> {
    // Actors are isoluminant with the gray base and differ from it by equal
    // and opposite offsets in two color channels. That keeps each one out of
    // the intensity channel and splits the two opponent channels evenly
    // among them; a blue offset would own the blue-yellow channel and leave
    // the other actors without attention. All levels sit at histogram bin
    // centers so the background texture never straddles a bin edge.
    const D: f64 = 0.3;
    let hue = |base: f64, o: [f64; 3]| [base + D * o[0], base + D * o[1], base + D * o[2]];
    let red = hue(0.45, [1.0, -1.0, 0.0]);
    let green = hue(0.45, [-1.0, 1.0, 0.0]);
    let orange = hue(0.45, [1.0, 0.0, -1.0]);
    let yellow = hue(0.45, [0.0, 1.0, -1.0]);
    // Tall and narrow like a pedestrian; wider blobs split into several
    // attended fragments.
    const SIZE: [f64; 2] = [3.0, 7.0];
    const SPEED: f64 = 2.0;
    const JUMP: f64 = 5.0;

    let gray = Background {
        base: [0.45; 3],
        noise: 0.03,
        temporal_noise: 0.02,
    };
    let scene = |seed, frame_count, background: &Background, actors| SceneScript {
        seed,
        frame_count,
        width: 86,
        height: 64,
        background: background.clone(),
        min_contrast: 0.2,
        actors,
    };
    let (lo, hi) = LANE;
    let walker = |color, waypoints| actor(color, SIZE, waypoints, SPEED);
    let lane = |color, y: f64, start: f64| {
        let far = if start - lo < hi - start { hi } else { lo };
        let near = lo + hi - far;
        walker(color, vec![[start, y], [far, y], [near, y], [far, y], [near, y]])
    };
    // Runs from `at` toward `toward` for the last frames of a scene of
    // `frames`, as many as the remaining lane allows (at most 8).
    let runner = |color, y: f64, at: f64, toward: f64, frames: u64| {
        let run = (((toward - at).abs() / (SPEED * JUMP)).floor() as u64).min(8);
        let frame = frames - run;
        with_jump(
            walker(color, bounce_into(y, SPEED, frame - 1, at, toward)),
            frame,
            JUMP,
        )
    };
    vec![
        // a far walker breaks into a run
        scene(
            101,
            90,
            &gray,
            vec![
                runner(red, 10.0, 70.0, lo, 90),
                lane(orange, 26.0, hi),
                lane(green, 42.0, 12.0),
                lane(yellow, 56.0, 60.0),
            ],
        ),
        // a near walker breaks into a run
        scene(
            202,
            90,
            &gray,
            vec![
                lane(green, 8.0, lo),
                lane(orange, 24.0, hi),
                lane(yellow, 40.0, 30.0),
                runner(red, 55.0, 60.0, lo, 90),
            ],
        ),
        // two runs at different depths
        scene(
            303,
            96,
            &gray,
            vec![
                runner(green, 12.0, 66.0, lo, 96),
                lane(yellow, 27.0, hi),
                runner(orange, 42.0, 20.0, hi, 96),
                lane(red, 57.0, lo),
            ],
        ),
        // turning paths and a walker pacing up and down the right edge
        scene(
            404,
            90,
            &gray,
            vec![
                walker(
                    red,
                    vec![[8.0, 8.0], [40.0, 8.0], [40.0, 20.0], [66.0, 20.0], [8.0, 20.0], [66.0, 20.0]],
                ),
                walker(
                    green,
                    vec![[66.0, 34.0], [50.0, 34.0], [50.0, 42.0], [8.0, 42.0], [66.0, 42.0], [8.0, 42.0]],
                ),
                runner(yellow, 56.0, 24.0, hi, 90),
                walker(orange, [22.0, 40.0].repeat(8).iter().map(|&y| [80.0, y]).collect()),
            ],
        ),
        // grainier sensor, brighter background
        scene(
            505,
            90,
            &Background {
                base: [0.55; 3],
                noise: 0.035,
                temporal_noise: 0.025,
            },
            vec![
                lane(hue(0.55, [1.0, 0.0, -1.0]), 10.0, hi),
                runner(hue(0.55, [0.0, 1.0, -1.0]), 26.0, 62.0, lo, 90),
                lane(hue(0.55, [1.0, -1.0, 0.0]), 42.0, 40.0),
                lane(hue(0.55, [-1.0, 1.0, 0.0]), 56.0, lo),
            ],
        ),
    ]
}

/// Renders every frame of a script together with its ground truth.
pub fn render(script: &SceneScript) -> Result<(Vec<Frame>, GroundTruth)> {
    let r = SceneRenderer::new(script.clone())?;
    let frames = (0..r.frame_count())
        .map(|t| r.frame(t))
        .collect::<Result<Vec<_>>>()?;
    Ok((frames, r.truth()))
}
