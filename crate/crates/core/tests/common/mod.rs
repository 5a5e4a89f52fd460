//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use std::f64::consts::PI;

use salwatch::spectral::ZERO_AMPLITUDE;
use salwatch::Plane;

#[derive(Clone, Copy)]
struct C(f64, f64);

impl C {
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
}

/// Direct O(W²H²) evaluation of the same transform, written without any FFT.
pub fn oracle_pft(p: &Plane) -> Vec<f64> {
    let (w, h) = p.dims();
    let tw = |n: usize, sign: f64| -> Vec<C> {
        (0..n).map(|k| {
            let a = sign * 2.0 * PI * k as f64 / n as f64;
            C(a.cos(), a.sin())
        })
        .collect()
    };
    let (fx, fy, ix, iy) = (tw(w, -1.0), tw(h, -1.0), tw(w, 1.0), tw(h, 1.0));

    let mut phase = vec![C(0.0, 0.0); w * h];
    for v in 0..h {
        for u in 0..w {
            let mut acc = C(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let e = fx[(u * x) % w].mul(fy[(v * y) % h]);
                    let f = p.get(x, y);
                    acc.0 += f * e.0;
                    acc.1 += f * e.1;
                }
            }
            let amp = acc.0.hypot(acc.1);
            phase[v * w + u] = if amp < ZERO_AMPLITUDE {
                C(1.0, 0.0)
            } else {
                C(acc.0 / amp, acc.1 / amp)
            };
        }
    }

    let n = (w * h) as f64;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = C(0.0, 0.0);
            for v in 0..h {
                for u in 0..w {
                    let t = phase[v * w + u].mul(ix[(u * x) % w].mul(iy[(v * y) % h]));
                    acc.0 += t.0;
                    acc.1 += t.1;
                }
            }
            out[y * w + x] = (acc.0 / n).powi(2) + (acc.1 / n).powi(2);
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
