//! Brute-force 1 ns grid oracle and random curve generator shared by the
//! min-plus suites. Deliberately naive: every quantity is recomputed from
//! sampled values with no knowledge of breakpoints.
#![allow(dead_code)]

use rand::Rng;
use tsn_minplus::{Curve, CurveShape, Q};

pub fn to_f(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

/// Samples `c` at every integer nanosecond of `[0, h]`.
pub fn grid(c: &Curve, h: i64) -> Vec<f64> {
    let segs: Vec<(f64, f64, f64)> = c.segments().iter().map(|&(s, v, r)| (to_f(s), to_f(v), to_f(r))).collect();
    let mut out = Vec::with_capacity(h as usize + 1);
    out.push(to_f(c.value_at_zero()));
    let mut k = 0;
    for t in 1..=h {
        let tf = t as f64;
        while k + 1 < segs.len() && segs[k + 1].0 < tf {
            k += 1;
        }
        let (s, v, r) = segs[k];
        out.push(v + r * (tf - s));
    }
    out
}

pub fn conv_at(x: &[f64], y: &[f64], t: usize) -> f64 {
    (0..=t).map(|s| x[t - s] + y[s]).fold(f64::INFINITY, f64::min)
}

pub fn deconv_at(x: &[f64], y: &[f64], t: usize) -> f64 {
    let h = x.len().min(y.len()) - 1;
    (0..=h - t).map(|u| x[t + u] - y[u]).fold(f64::NEG_INFINITY, f64::max)
}

/// `None` when some `alpha(t)` is never reached by `beta` on the grid.
pub fn hdev(a: &[f64], b: &[f64]) -> Option<f64> {
    let mut p = 0usize;
    let mut best = 0usize;
    for t in 0..a.len() {
        while p < b.len() && b[p] < a[t] - 1e-6 {
            p += 1;
        }
        if p >= b.len() {
            return None;
        }
        best = best.max(p.max(t) - t);
    }
    Some(best as f64)
}

pub fn vdev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x - y).fold(0.0, f64::max)
}

/// Random non-decreasing curve with integer breakpoints, value 0 at the
/// origin and slopes of at most `max_slope` bits/ns.
pub fn random_curve<R: Rng>(rng: &mut R, h: i64, max_pieces: usize, max_slope: i64) -> Curve {
    let n = rng.gen_range(1..=max_pieces);
    let mut starts: Vec<i64> = (0..n - 1).map(|_| rng.gen_range(1..h)).collect();
    starts.push(0);
    starts.sort();
    starts.dedup();
    let mut pieces = Vec::new();
    let mut level = Q::from(0);
    for (i, &s) in starts.iter().enumerate() {
        let s = Q::from(s as i128);
        if i > 0 {
            let (ps, _, pr): (Q, Q, Q) = pieces[i - 1];
            level += pr * (s - ps);
        }
        if rng.gen_bool(0.5) {
            level += Q::from(rng.gen_range(0..5_000i128));
        }
        let den = [1i128, 2, 3, 4, 5, 7, 10][rng.gen_range(0..7)];
        let slope = if rng.gen_bool(0.2) { Q::from(0) } else { Q::new(rng.gen_range(0..=max_slope as i128 * den), den) };
        pieces.push((s, level, slope));
    }
    Curve::make(&CurveShape::AffinePieces(pieces), Q::from(h as i128)).expect("generator produced invalid curve")
}

pub fn random_horizon<R: Rng>(rng: &mut R) -> i64 {
    // log-uniform over [1 us, 2 ms]
    let e = rng.gen_range(3.0f64..6.301);
    10f64.powf(e) as i64
}

/// Checks `mine` against a grid value allowing for the one-sided limits at jumps.
pub fn close_at_jump(c: &Curve, t: i64, grid_v: f64, tol: f64) -> bool {
    let tq = Q::from(t as i128);
    let left = to_f(c.eval(tq).unwrap());
    let right = if tq < c.horizon() { to_f(c.eval_right(tq).unwrap()) } else { left };
    grid_v >= left.min(right) - tol && grid_v <= left.max(right) + tol
}
