//! Region extraction against a from-scratch reference implementation, the
//! documented examples, and structural properties on random maps.

use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use salwatch::ior::{alpha_at, extract_regions, grow};
use salwatch::spectral::{disk_filter, SaliencyMap};
use salwatch::{IorConfig, Plane};

type Px = (usize, usize);

/// Labels every 8-connected component of the band mask, then returns the
/// one holding `seed`.
fn oracle_component(map: &[Vec<f64>], seed: Px, lo: f64, hi: f64) -> BTreeSet<Px> {
    let h = map.len();
    let w = map[0].len();
    let mut label = vec![vec![usize::MAX; w]; h];
    let mut next = 0;
    for sy in 0..h {
        for sx in 0..w {
            let v = map[sy][sx];
            if label[sy][sx] != usize::MAX || v < lo || v > hi {
                continue;
            }
            let mut queue = VecDeque::from([(sx, sy)]);
            label[sy][sx] = next;
            while let Some((x, y)) = queue.pop_front() {
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let v = map[ny][nx];
                        if label[ny][nx] == usize::MAX && v >= lo && v <= hi {
                            label[ny][nx] = next;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
            next += 1;
        }
    }
    let target = label[seed.1][seed.0];
    let mut out = BTreeSet::new();
    if target == usize::MAX {
        return out;
    }
    for y in 0..h {
        for x in 0..w {
            if label[y][x] == target {
                out.insert((x, y));
            }
        }
    }
    out
}

/// Reference extraction loop over nested vectors. Returns (pixels, peak).
fn oracle_extract(map: &Plane, cfg: &IorConfig) -> Vec<(BTreeSet<Px>, Px)> {
    let (w, h) = map.dims();
    let mut work: Vec<Vec<f64>> = (0..h).map(|y| (0..w).map(|x| map.get(x, y)).collect()).collect();
    let original_max = work.iter().flatten().cloned().fold(f64::MIN, f64::max);
    let limit = cfg.region_limit(w, h);
    let mut out = Vec::new();
    if original_max <= 0.0 {
        return out;
    }
    while out.len() < cfg.max_regions {
        // first maximum in row-major order
        let mut peak = (0, 0);
        for y in 0..h {
            for x in 0..w {
                if work[y][x] > work[peak.1][peak.0] {
                    peak = (x, y);
                }
            }
        }
        let pv = work[peak.1][peak.0];
        if pv < cfg.min_peak_fraction * original_max {
            break;
        }
        let alpha = alpha_at(peak.1, h, cfg);
        let comp = oracle_component(&work, peak, alpha * pv, pv);
        for &(x, y) in &comp {
            work[y][x] = 0.0;
        }
        if comp.len() <= limit {
            out.push((comp, peak));
        }
    }
    out
}

fn smooth_random_map(w: usize, h: usize, seed: u64, radius: usize) -> SaliencyMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Plane::from_fn(w, h, |_, _| rng.gen::<f64>().powi(4));
    let mut values = disk_filter(&raw, radius);
    let m = values.max();
    values.scale(1.0 / m);
    SaliencyMap {
        values,
        frame_index: 0,
    }
}

fn map_from(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> SaliencyMap {
    SaliencyMap {
        values: Plane::from_fn(w, h, f),
        frame_index: 0,
    }
}

fn with_alpha(alpha: f64) -> IorConfig {
    IorConfig {
        alpha_far: alpha,
        alpha_near: alpha,
        reference_area: None,
        ..IorConfig::default()
    }
}

#[test]
fn corner_plateau_gives_one_region() {
    let map = map_from(8, 8, |x, y| if x < 3 && y < 3 { 1.0 } else { 0.05 });
    let regions = extract_regions(&map, &with_alpha(0.55));
    assert_eq!(regions.len(), 1);
    assert_eq!(regions[0].size(), 9);
    assert_eq!(regions[0].peak, (0, 0));
}

#[test]
fn two_plateaus_come_out_in_peak_order() {
    let map = map_from(12, 8, |x, y| match (x, y) {
        (1..=2, 1..=2) => 0.9,
        (8..=10, 4..=6) => 1.0,
        _ => 0.0,
    });
    let regions = extract_regions(&map, &with_alpha(0.55));
    assert_eq!(regions.len(), 2);
    assert_eq!(regions[0].size(), 9);
    assert_eq!(regions[0].bbox, (8, 4, 10, 6));
    assert_eq!(regions[1].size(), 4);
    assert_eq!(regions[1].bbox, (1, 1, 2, 2));
}

#[test]
fn oversize_component_is_suppressed_not_returned() {
    // 35 x 10 = 350 px plateau at working size, plus a small weaker spot
    let map = map_from(86, 64, |x, y| {
        if (10..45).contains(&x) && (20..30).contains(&y) {
            1.0
        } else if (60..63).contains(&x) && (50..53).contains(&y) {
            0.8
        } else {
            0.0
        }
    });
    let regions = extract_regions(&map, &IorConfig::default());
    assert_eq!(regions.len(), 1);
    assert_eq!(regions[0].size(), 9);
    assert_eq!(regions[0].peak_value, 0.8);
}

#[test]
fn busy_map_is_capped_at_n() {
    let map = map_from(86, 64, |x, y| if x % 6 == 0 && y % 6 == 0 { 1.0 - (x + y) as f64 / 400.0 } else { 0.0 });
    let regions = extract_regions(&map, &IorConfig::default());
    assert_eq!(regions.len(), 4);
}

#[test]
fn all_zero_map_has_no_regions() {
    let map = map_from(10, 10, |_, _| 0.0);
    assert!(extract_regions(&map, &IorConfig::default()).is_empty());
}

#[test]
fn equal_maxima_break_ties_by_row_then_column() {
    let map = map_from(10, 10, |x, y| if (x, y) == (7, 2) || (x, y) == (1, 5) || (x, y) == (3, 2) { 1.0 } else { 0.0 });
    let regions = extract_regions(&map, &with_alpha(0.5));
    let peaks: Vec<Px> = regions.iter().map(|r| r.peak).collect();
    assert_eq!(peaks, vec![(3, 2), (7, 2), (1, 5)]);
}

fn is_connected(pixels: &[Px]) -> bool {
    let set: BTreeSet<Px> = pixels.iter().copied().collect();
    let Some(&start) = pixels.first() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_reference_extraction(
        w in 6usize..40, h in 6usize..40, seed in any::<u64>(), radius in 0usize..3,
        n in 1usize..7, px in 5usize..120
    ) {
        let map = smooth_random_map(w, h, seed, radius.max(1));
        let cfg = IorConfig { max_regions: n, max_region_px: px, ..IorConfig::default() };
        let got = extract_regions(&map, &cfg);
        let want = oracle_extract(&map.values, &cfg);
        prop_assert_eq!(got.len(), want.len());
        for (r, (pixels, peak)) in got.iter().zip(&want) {
            prop_assert_eq!(r.peak, *peak);
            let set: BTreeSet<Px> = r.pixels.iter().copied().collect();
            prop_assert_eq!(&set, pixels);
        }
    }

    #[test]
    fn regions_are_disjoint_connected_banded_and_ordered(
        w in 8usize..50, h in 8usize..50, seed in any::<u64>()
    ) {
        let map = smooth_random_map(w, h, seed, 2);
        let cfg = IorConfig { max_regions: 6, ..IorConfig::default() };
        let regions = extract_regions(&map, &cfg);
        prop_assert!(regions.len() <= 6);
        let mut all = BTreeSet::new();
        for r in &regions {
            prop_assert!(r.size() <= cfg.region_limit(w, h));
            prop_assert!(is_connected(&r.pixels));
            prop_assert!(r.pixels.contains(&r.peak));
            for &(x, y) in &r.pixels {
                prop_assert!(all.insert((x, y)), "pixel ({}, {}) in two regions", x, y);
                // earlier suppressions never touch this region, so the
                // original value is the value seen at extraction time
                let v = map.values.get(x, y);
                prop_assert!(v >= r.alpha * r.peak_value - 1e-15 && v <= r.peak_value);
            }
            let (x0, y0, x1, y1) = r.bbox;
            prop_assert_eq!(r.center, ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0));
        }
        for pair in regions.windows(2) {
            prop_assert!(pair[0].peak_value >= pair[1].peak_value);
        }
    }

    #[test]
    fn raising_alpha_never_grows_a_region(
        w in 6usize..30, h in 6usize..30, seed in any::<u64>(),
        a in 0.05f64..0.95, b in 0.05f64..0.95
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let map = smooth_random_map(w, h, seed, 1);
        let peak = map.values.argmax().unwrap();
        let pv = map.values.get(peak.0, peak.1);
        let loose: BTreeSet<Px> = grow(&map.values, peak, lo * pv, pv).into_iter().collect();
        let tight: BTreeSet<Px> = grow(&map.values, peak, hi * pv, pv).into_iter().collect();
        prop_assert!(tight.is_subset(&loose));
    }

    #[test]
    fn alpha_is_monotone_in_row(h in 2usize..200, far in 0.05f64..0.95, near in 0.05f64..0.95) {
        let cfg = IorConfig { alpha_far: far, alpha_near: near, ..IorConfig::default() };
        let rows: Vec<f64> = (0..h).map(|r| alpha_at(r, h, &cfg)).collect();
        prop_assert!((rows[0] - far).abs() < 1e-12);
        prop_assert!((rows[h - 1] - near).abs() < 1e-12);
        for pair in rows.windows(2) {
            if far >= near {
                prop_assert!(pair[0] >= pair[1] - 1e-12);
            } else {
                prop_assert!(pair[0] <= pair[1] + 1e-12);
            }
        }
    }
}
