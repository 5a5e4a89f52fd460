//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::{BTreeSet, VecDeque};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{max_abs_diff, oracle_pft};
use salwatch::descriptors::ColorHistogram;
use salwatch::ior::extract_regions;
use salwatch::metrics::Evaluator;
use salwatch::spectral::{disk_filter, pft, SaliencyMap};
use salwatch::synthgen::{benchmark_suite, Actor, Background, SceneRenderer};
use salwatch::tracker::{assign, color_match, decision, position_match, update, TrackRecord};
use salwatch::{
    EvalReport, IorConfig, MatchConfig, Pipeline, PipelineConfig, Plane, RegionDescriptor,
    SceneScript, TrackMemory,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, name: &str, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} [{n}] {name}: {}", o.detail);
}

fn spectral_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (w, h) = (rng.gen_range(2..=32), rng.gen_range(2..=32));
        let p = Plane::from_fn(w, h, |_, _| rng.gen_range(-1.0..1.0));
        worst = worst.max(max_abs_diff(pft(&p).unwrap().data(), &oracle_pft(&p)));
    }
    Outcome {
        pass: worst < 1e-6,
        detail: format!("200 planes, max abs diff {worst:.2e} (< 1e-6)"),
    }
}

fn localization() -> Outcome {
    let script = SceneScript {
        seed: 77,
        frame_count: 50,
        width: 86,
        height: 64,
        background: Background {
            base: [0.5; 3],
            noise: 0.03,
            temporal_noise: 0.0,
        },
        min_contrast: 0.2,
        actors: vec![Actor {
            color: [0.9, 0.1, 0.1],
            size: [5.0, 5.0],
            waypoints: vec![[10.0, 20.0], [76.0, 44.0], [10.0, 44.0]],
            speeds: vec![1.5, 1.5],
            jump_frame: None,
            jump_factor: 1.0,
        }],
    };
    let renderer = SceneRenderer::new(script).unwrap();
    let truth = renderer.truth();
    let mut pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
    let mut hits = 0;
    for t in 0..renderer.frame_count() {
        let (_, map, _) = pipeline.attend(&renderer.frame(t).unwrap()).unwrap();
        let (x, y) = map.values.argmax().unwrap();
        let b = truth.frames[t as usize].objects[0].dilated(8.0);
        if b.contains((x as f64, y as f64)) {
            hits += 1;
        }
    }
    let rate = hits as f64 / 50.0;
    Outcome {
        pass: rate >= 0.9,
        detail: format!("argmax in dilated box on {hits}/50 frames ({:.0}%, need >= 90%)", rate * 100.0),
    }
}

/// Per-scene reports of the benchmark suite under the default config.
fn run_suite() -> Vec<(u64, EvalReport)> {
    benchmark_suite()
        .into_iter()
        .map(|script| {
            let seed = script.seed;
            let renderer = SceneRenderer::new(script).unwrap();
            let truth = renderer.truth();
            let mut pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
            let mut eval = Evaluator::new(Some(&truth));
            for t in 0..renderer.frame_count() {
                let out = pipeline.process(&renderer.frame(t).unwrap()).unwrap();
                eval.record_frame(
                    out.frame.width() * out.frame.height(),
                    out.kept_area(),
                    &out.matches(),
                    &out.events,
                    out.bottom_up,
                    out.total,
                );
            }
            (seed, eval.finish())
        })
        .collect()
}

struct Totals {
    frames: usize,
    true_matches: usize,
    false_matches: usize,
    opportunities: usize,
    flagged: usize,
    false_alerts: usize,
    jumps: usize,
    detected: usize,
    coverage: f64,
    bottom_up_ms: f64,
    total_ms: f64,
}

fn totals(reports: &[(u64, EvalReport)]) -> Totals {
    let frames: usize = reports.iter().map(|(_, r)| r.frames).sum();
    // frame-weighted means
    let mean = |f: fn(&EvalReport) -> f64| {
        reports.iter().map(|(_, r)| f(r) * r.frames as f64).sum::<f64>() / frames as f64
    };
    Totals {
        frames,
        true_matches: reports.iter().map(|(_, r)| r.true_matches).sum(),
        false_matches: reports.iter().map(|(_, r)| r.false_matches).sum(),
        opportunities: reports.iter().map(|(_, r)| r.match_opportunities).sum(),
        flagged: reports.iter().map(|(_, r)| r.n_suspicious_flagged).sum(),
        false_alerts: reports.iter().map(|(_, r)| r.n_false_alerts).sum(),
        jumps: reports.iter().map(|(_, r)| r.jumps).sum(),
        detected: reports.iter().map(|(_, r)| r.jumps_detected).sum(),
        coverage: mean(|r| r.mean_region_coverage),
        bottom_up_ms: mean(|r| r.mean_bottom_up_ms),
        total_ms: mean(|r| r.mean_total_ms),
    }
}

fn is_connected(pixels: &[(usize, usize)]) -> bool {
    let set: BTreeSet<_> = pixels.iter().copied().collect();
    let mut seen = BTreeSet::from([pixels[0]]);
    let mut queue = VecDeque::from([pixels[0]]);
    while let Some((x, y)) = queue.pop_front() {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let n = ((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                if set.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    seen.len() == set.len()
}

/// Randomized sweep over the module invariants; returns the failures.
fn invariants() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let cfg = MatchConfig::default();
    let random_hist = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(1..80);
        let px: Vec<[f64; 3]> = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        ColorHistogram::from_pixels(&px).unwrap()
    };

    for _ in 0..300 {
        let a = random_hist(&mut rng);
        let b = random_hist(&mut rng);
        if a.bins.iter().any(|ch| (ch.iter().sum::<f64>() - 1.0).abs() > 1e-9) {
            failures.push("histogram bins do not sum to 1".into());
        }
        let mut pt = || (rng.gen_range(0.0..86.0), rng.gen_range(0.0..64.0));
        let (cur, last, prev) = (pt(), pt(), pt());
        let cm = color_match(&a, &b, &cfg);
        let pm = position_match(cur, last, Some(prev), rng.gen(), &cfg);
        let d = decision(cm, pm, &cfg);
        if ![cm, pm, d].iter().all(|v| (0.0..=1.0).contains(v)) {
            failures.push(format!("match values out of range: {cm} {pm} {d}"));
        }
        if cm != color_match(&b, &a, &cfg) {
            failures.push("color match is not symmetric".into());
        }
    }

    for _ in 0..100 {
        let (w, h) = (rng.gen_range(8..60), rng.gen_range(8..60));
        let raw = Plane::from_fn(w, h, |_, _| rng.gen::<f64>().powi(4));
        let mut values = disk_filter(&raw, 2);
        let m = values.max();
        values.scale(1.0 / m);
        let map = SaliencyMap {
            values,
            frame_index: 0,
        };
        let regions = extract_regions(&map, &IorConfig::default());
        let mut all = BTreeSet::new();
        for r in &regions {
            if !is_connected(&r.pixels) {
                failures.push("region is not 8-connected".into());
            }
            for &(x, y) in &r.pixels {
                let v = map.values.get(x, y);
                if !all.insert((x, y)) {
                    failures.push("regions overlap".into());
                }
                if v < r.alpha * r.peak_value - 1e-15 || v > r.peak_value {
                    failures.push("region pixel outside its band".into());
                }
            }
        }
        if regions.windows(2).any(|p| p[0].peak_value < p[1].peak_value) {
            failures.push("regions not ordered by peak".into());
        }
    }

    for _ in 0..50 {
        let cap = rng.gen_range(1..7);
        let mut mem = TrackMemory::new(cap).unwrap();
        for t in 0..40u64 {
            let ds: Vec<RegionDescriptor> = (0..rng.gen_range(0..5))
                .map(|_| RegionDescriptor {
                    histogram: random_hist(&mut rng),
                    size: 20,
                    center: (rng.gen_range(0.0..86.0), rng.gen_range(0.0..64.0)),
                    frame_index: t,
                    row_band: rng.gen(),
                })
                .collect();
            if mem.is_full() && rng.gen_bool(0.3) {
                let scores: Vec<(u64, f64)> =
                    mem.records().iter().map(|r: &TrackRecord| (r.id, r.del_decision(t))).collect();
                mem.current_frame = t;
                let gone = mem.evict().unwrap();
                let min = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
                if scores.iter().find(|s| s.0 == gone).map(|s| s.1) != Some(min) {
                    failures.push("eviction did not remove the minimum".into());
                }
            }
            let out = assign(&ds, &mem, &cfg);
            update(&mut mem, &out, t, &cfg).unwrap();
            if mem.len() > cap {
                failures.push(format!("memory holds {} of {cap}", mem.len()));
            }
        }
    }

    let script = benchmark_suite().remove(0);
    let run = || {
        let r = SceneRenderer::new(script.clone()).unwrap();
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        (0..30)
            .map(|t| {
                let out = p.process(&r.frame(t).unwrap()).unwrap();
                (out.regions, out.events, out.saliency.values)
            })
            .collect::<Vec<_>>()
    };
    if run() != run() {
        failures.push("pipeline is not deterministic".into());
    }

    failures.sort();
    failures.dedup();
    failures
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut all_pass = true;
    let mut check = |n, name: &str, o: Outcome| {
        report(n, name, &o);
        all_pass &= o.pass;
    };

    check(1, "spectral oracle equivalence", spectral_oracle());
    check(2, "saliency localization", localization());

    let reports = run_suite();
    for (seed, r) in &reports {
        println!(
            "       scene {seed}: matches {}/{} flagged {} false {} jumps {}/{} coverage {:.3}",
            r.true_matches,
            r.true_matches + r.false_matches,
            r.n_suspicious_flagged,
            r.n_false_alerts,
            r.jumps_detected,
            r.jumps,
            r.mean_region_coverage
        );
    }
    let s = totals(&reports);

    check(
        3,
        "coverage band",
        Outcome {
            pass: (0.03..=0.15).contains(&s.coverage),
            detail: format!("mean coverage {:.2}% (in [3%, 15%])", s.coverage * 100.0),
        },
    );
    let decided = s.true_matches + s.false_matches;
    let score = if decided > 0 { s.true_matches as f64 / decided as f64 } else { 0.0 };
    check(
        4,
        "match score",
        Outcome {
            pass: score >= 0.95 && s.opportunities >= 300,
            detail: format!(
                "{}/{decided} = {score:.4} (>= 0.95) over {} opportunities (>= 300)",
                s.true_matches, s.opportunities
            ),
        },
    );
    check(
        5,
        "suspicion recall",
        Outcome {
            pass: s.jumps > 0 && s.detected == s.jumps,
            detail: format!("{}/{} jumps flagged within 2 frames (need all)", s.detected, s.jumps),
        },
    );
    let rate = if s.flagged > 0 { s.false_alerts as f64 / s.flagged as f64 } else { 0.0 };
    check(
        6,
        "false-alert bound",
        Outcome {
            pass: rate <= 0.25,
            detail: format!("{}/{} = {rate:.3} (<= 0.25)", s.false_alerts, s.flagged),
        },
    );
    check(
        7,
        "latency budget",
        Outcome {
            pass: s.bottom_up_ms <= 10.0 && s.total_ms <= 100.0,
            detail: format!(
                "bottom-up {:.2} ms (<= 10), total {:.2} ms (<= 100) per frame over {} frames",
                s.bottom_up_ms, s.total_ms, s.frames
            ),
        },
    );
    let failures = invariants();
    check(
        8,
        "invariant suite",
        Outcome {
            pass: failures.is_empty(),
            detail: if failures.is_empty() {
                "histograms, match ranges, IOR regions, memory bound, eviction, determinism".into()
            } else {
                failures.join("; ")
            },
        },
    );

    println!("acceptance finished in {:.1}s", started.elapsed().as_secs_f64());
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
