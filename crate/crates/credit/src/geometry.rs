//! Geometry of the class A and class B credit lines: where they meet, and
//! where a class A segment crosses zero.
//!
//! The timing-difference helpers use the signed convention of the underlying
//! derivations, in which a sending phase lasts `(V_max - V_min) / S` and is
//! therefore negative. `phase_times` reports the same quantity as a positive
//! duration.

use crate::{CreditBounds, CreditError, CreditParams, Q};
use num_traits::{One, Signed, Zero};

/// Intersection of `V_a(t) = va + slope_a (t - t_m)` and
/// `V_b(t) = vb + slope_b (t - t_m)`.
pub fn intersection(t_m: Q, va: Q, slope_a: Q, vb: Q, slope_b: Q) -> Result<(Q, Q), CreditError> {
    if slope_a == slope_b {
        return Err(CreditError::Parallel);
    }
    let dt = (vb - va) / (slope_a - slope_b);
    Ok((t_m + dt, va + slope_a * dt))
}

/// Whether two lines through `(t_m, va)` and `(t_m, vb)` meet exactly at the
/// middle of `[t_m, t_next]`.
pub fn crosses_at_midpoint(t_m: Q, t_next: Q, va: Q, slope_a: Q, vb: Q, slope_b: Q) -> bool {
    match intersection(t_m, va, slope_a, vb, slope_b) {
        Ok((t, _)) => t * 2 == t_m + t_next,
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroCrossing {
    /// `-V1 / V2`
    pub k: Q,
    pub t_eq: Q,
}

/// Zero of the segment from `(t1, v1)` to `(t2, v2)`, written as the
/// `k`-weighted mean `(t1 + k t2) / (k + 1)`.
pub fn zero_crossing(t1: Q, v1: Q, t2: Q, v2: Q) -> Result<ZeroCrossing, CreditError> {
    if t2 <= t1 {
        return Err(CreditError::DegenerateSegment);
    }
    if !(v1 * v2).is_negative() {
        return Err(CreditError::NoSignChange);
    }
    let k = -v1 / v2;
    Ok(ZeroCrossing { k, t_eq: (t1 + k * t2) / (k + Q::one()) })
}

/// The closed form `(V2 t1 - V1 t2) / (V1 - V2)` taken literally. It is the
/// negated zero crossing; kept for comparison only.
pub fn t_eq_literal(t1: Q, v1: Q, t2: Q, v2: Q) -> Result<Q, CreditError> {
    if v1 == v2 {
        return Err(CreditError::NoSignChange);
    }
    Ok((v2 * t1 - v1 * t2) / (v1 - v2))
}

/// Anchor points of one hyperperiod slice. Class A falls from `v_a1` (its
/// maximum at `t1`) to `v_a2` (its minimum at `t2`) while class B moves from
/// `v_b1` to `v_b2`. `t_m`, `v_a_m`, `v_b_m` are the left end of the window in
/// which both credits rise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometryAnchors {
    pub t_m: Q,
    pub v_a_m: Q,
    pub v_b_m: Q,
    pub t1: Q,
    pub v_a1: Q,
    pub t2: Q,
    pub v_a2: Q,
    pub v_b1: Q,
    pub v_b2: Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub t_same: Q,
    pub v_same: Q,
    pub k: Q,
    pub t_eq: Q,
    /// `(t_eq - t1) / (t2 - t_eq)`
    pub k1: Q,
    pub v_mid_b: Q,
}

/// Intersection of the two rising credit lines (slopes `I_A`, `I_B`) and the
/// class B credit at the zero crossing of class A.
pub fn credit_geometry(pa: &CreditParams, pb: &CreditParams, an: GeometryAnchors) -> Result<Geometry, CreditError> {
    pa.validate()?;
    pb.validate()?;
    let (t_same, v_same) = intersection(an.t_m, an.v_a_m, pa.idle, an.v_b_m, pb.idle)?;
    let z = zero_crossing(an.t1, an.v_a1, an.t2, an.v_a2)?;
    let k1 = (z.t_eq - an.t1) / (an.t2 - z.t_eq);
    let v_mid_b = (an.v_b1 + k1 * an.v_b2) / (k1 + Q::one());
    Ok(Geometry { t_same, v_same, k: z.k, t_eq: z.t_eq, k1, v_mid_b })
}

fn check(pa: &CreditParams, pb: &CreditParams) -> Result<(), CreditError> {
    pa.validate()?;
    pb.validate()?;
    if pa.rate != pb.rate {
        return Err(CreditError::SlopeMismatch { send: pb.send });
    }
    Ok(())
}

/// Rising-phase difference `dt_B+ - dt_A+`, with `I_B` written as `C + S_B`.
pub fn idle_time_difference(pa: &CreditParams, a: CreditBounds, pb: &CreditParams, b: CreditBounds) -> Result<Q, CreditError> {
    check(pa, pb)?;
    let (ia, sa, sb, c) = (pa.idle, pa.send, pb.send, pa.rate);
    Ok((ia * (b.v_max - a.v_max) - a.v_max * (sb - sa)) / (ia * (c + sb)))
}

/// Falling-phase difference `dt_B- - dt_A-` (signed convention).
pub fn send_time_difference(pa: &CreditParams, a: CreditBounds, pb: &CreditParams, b: CreditBounds) -> Result<Q, CreditError> {
    check(pa, pb)?;
    let (sa, sb) = (pa.send, pb.send);
    Ok((sa * (b.v_max - b.v_min) - sb * (a.v_max - a.v_min)) / (sa * sb))
}

/// `dt_A- - dt_A+` (signed convention).
pub fn send_vs_idle_a(pa: &CreditParams, a: CreditBounds) -> Result<Q, CreditError> {
    pa.validate()?;
    let (i, c) = (pa.idle, pa.rate);
    if i.is_zero() {
        return Err(CreditError::NonPositiveIdle);
    }
    Ok((i * a.v_min - c * a.v_max) / (i * (c - i)))
}

/// `dt_B- - dt_B+` (signed convention).
pub fn send_vs_idle_b(pb: &CreditParams, b: CreditBounds) -> Result<Q, CreditError> {
    pb.validate()?;
    let (i, c) = (pb.idle, pb.rate);
    Ok((c * b.v_max - i * b.v_min) / (i * (i - c)))
}
