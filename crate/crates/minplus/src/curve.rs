use crate::pl::{Env, Piece, Pl};
use crate::{CurveError, Q};
use num_traits::{Signed, Zero};
use std::fmt;

/// Value used for the "infinite" part of pure-delay and infinite-rate servers.
/// Large enough to dominate every finite quantity in a desk-scale network,
/// small enough that sums of a few of them stay well inside `i128`.
pub fn big() -> Q {
    Q::from(1i128 << 62)
}

/// Curve families used by arrival and service descriptions.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveShape {
    /// `b + r t` for `t > 0`.
    LeakyBucket { b: Q, r: Q },
    /// `R [t - T]+`.
    RateLatency { rate: Q, latency: Q },
    /// `step * ceil((t - offset) / period)+`; jumps just after `offset + k period`.
    Staircase { step: Q, period: Q, offset: Q },
    /// Explicit pieces `(start, right-limit value, slope)`, first start 0, value 0 at the origin.
    AffinePieces(Vec<(Q, Q, Q)>),
}

/// A non-negative, non-decreasing, left-continuous curve on `[0, horizon]`.
#[derive(Clone, PartialEq, Eq)]
pub struct Curve {
    pl: Pl,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Curve[0,{}] f(0)={}", self.pl.hi, self.pl.at_lo)?;
        for p in &self.pl.pieces {
            write!(f, " ({}: {} @{})", p.start, p.value, p.slope)?;
        }
        Ok(())
    }
}

impl Curve {
    /// Validates a raw piecewise-linear function as a curve.
    pub fn from_pl(pl: Pl) -> Result<Curve, CurveError> {
        if !pl.lo.is_zero() {
            return Err(CurveError::Invalid(format!("curve must start at 0, got {}", pl.lo)));
        }
        if !pl.hi.is_positive() {
            return Err(CurveError::NonPositiveHorizon);
        }
        if !pl.well_formed() {
            return Err(CurveError::Invalid("segments not sorted from 0".into()));
        }
        if pl.at_lo.is_negative() {
            return Err(CurveError::Invalid("negative value at 0".into()));
        }
        let mut prev_end = pl.at_lo;
        for (k, p) in pl.pieces.iter().enumerate() {
            if p.slope.is_negative() {
                return Err(CurveError::Invalid(format!("negative slope at t={}", p.start)));
            }
            if p.value < prev_end {
                return Err(CurveError::Invalid(format!("downward jump at t={}", p.start)));
            }
            let end = pl.pieces.get(k + 1).map_or(pl.hi, |n| n.start);
            prev_end = p.at(end);
        }
        Ok(Curve { pl: pl.normalize() })
    }

    pub fn make(shape: &CurveShape, horizon: Q) -> Result<Curve, CurveError> {
        if !horizon.is_positive() {
            return Err(CurveError::NonPositiveHorizon);
        }
        let z = Q::zero();
        let pl = match shape {
            CurveShape::LeakyBucket { b, r } => {
                non_negative("b", *b)?;
                non_negative("r", *r)?;
                Pl { lo: z, hi: horizon, at_lo: z, pieces: vec![Piece { start: z, value: *b, slope: *r }] }
            }
            CurveShape::RateLatency { rate, latency } => {
                non_negative("R", *rate)?;
                non_negative("T", *latency)?;
                let mut pieces = vec![Piece { start: z, value: z, slope: if latency.is_zero() { *rate } else { z } }];
                if latency.is_positive() && latency < &horizon {
                    pieces.push(Piece { start: *latency, value: z, slope: *rate });
                }
                Pl { lo: z, hi: horizon, at_lo: z, pieces }
            }
            CurveShape::Staircase { step, period, offset } => {
                non_negative("step", *step)?;
                non_negative("offset", *offset)?;
                if !period.is_positive() {
                    return Err(CurveError::NegativeParameter("period"));
                }
                return Ok(staircase(*step, *period, *offset, horizon));
            }
            CurveShape::AffinePieces(list) => {
                let pieces = list
                    .iter()
                    .filter(|(s, _, _)| *s < horizon)
                    .map(|&(start, value, slope)| Piece { start, value, slope })
                    .collect();
                Pl { lo: z, hi: horizon, at_lo: z, pieces }
            }
        };
        Curve::from_pl(pl)
    }

    pub fn zero(horizon: Q) -> Curve {
        Curve { pl: Pl::constant(Q::zero(), horizon, Q::zero()) }
    }

    /// `r t`.
    pub fn rate(r: Q, horizon: Q) -> Curve {
        Curve { pl: Pl::linear(Q::zero(), horizon, Q::zero(), r) }
    }

    /// `delta_T`: 0 up to `T`, effectively infinite afterwards.
    pub fn pure_delay(latency: Q, horizon: Q) -> Curve {
        let z = Q::zero();
        let mut pieces = vec![Piece { start: z, value: if latency.is_zero() { big() } else { z }, slope: z }];
        if latency.is_positive() && latency < horizon {
            pieces.push(Piece { start: latency, value: big(), slope: z });
        }
        Curve { pl: Pl { lo: z, hi: horizon, at_lo: z, pieces }.normalize() }
    }

    /// Infinite-rate, zero-latency server.
    pub fn infinite_server(horizon: Q) -> Curve {
        Curve::pure_delay(Q::zero(), horizon)
    }

    pub fn horizon(&self) -> Q {
        self.pl.hi
    }

    pub fn pl(&self) -> &Pl {
        &self.pl
    }

    /// Breakpoints as `(start, right-limit value, slope)`.
    pub fn segments(&self) -> Vec<(Q, Q, Q)> {
        self.pl.pieces.iter().map(|p| (p.start, p.value, p.slope)).collect()
    }

    pub fn value_at_zero(&self) -> Q {
        self.pl.at_lo
    }

    pub fn eval(&self, t: Q) -> Result<Q, CurveError> {
        self.check_t(t)?;
        Ok(self.pl.eval(t))
    }

    pub fn eval_right(&self, t: Q) -> Result<Q, CurveError> {
        self.check_t(t)?;
        if t == self.pl.hi {
            return Err(CurveError::BeyondHorizon { t, horizon: self.pl.hi });
        }
        Ok(self.pl.eval_right(t))
    }

    fn check_t(&self, t: Q) -> Result<(), CurveError> {
        if t.is_negative() || t > self.pl.hi {
            return Err(CurveError::BeyondHorizon { t, horizon: self.pl.hi });
        }
        Ok(())
    }

    /// Slope of the last piece; the long-run rate as seen inside the horizon.
    pub fn final_slope(&self) -> Q {
        self.pl.pieces.last().map_or(Q::zero(), |p| p.slope)
    }

    pub fn truncate(&self, horizon: Q) -> Result<Curve, CurveError> {
        if !horizon.is_positive() {
            return Err(CurveError::NonPositiveHorizon);
        }
        if horizon > self.pl.hi {
            return Err(CurveError::BeyondHorizon { t: horizon, horizon: self.pl.hi });
        }
        Ok(Curve { pl: self.pl.restrict(Q::zero(), horizon) })
    }

    pub fn add(&self, other: &Curve) -> Curve {
        Curve { pl: self.pl.add(&other.pl) }
    }

    pub fn scale(&self, k: Q) -> Curve {
        assert!(!k.is_negative(), "negative scale");
        Curve { pl: self.pl.affine(k, Q::zero()).normalize() }
    }

    pub fn min(&self, other: &Curve) -> Curve {
        let h = self.horizon().min(other.horizon());
        let a = self.pl.restrict(Q::zero(), h);
        let b = other.pl.restrict(Q::zero(), h);
        Curve { pl: a.envelope(&b, Env::Min) }
    }

    pub fn max(&self, other: &Curve) -> Curve {
        let h = self.horizon().min(other.horizon());
        let a = self.pl.restrict(Q::zero(), h);
        let b = other.pl.restrict(Q::zero(), h);
        Curve { pl: a.envelope(&b, Env::Max) }
    }

    /// `t -> f(t - d)` for `t > d`, `f(0)` before; same horizon.
    pub fn delay(&self, d: Q) -> Curve {
        assert!(!d.is_negative());
        if d.is_zero() {
            return self.clone();
        }
        let h = self.horizon();
        if d >= h {
            return Curve { pl: Pl::constant(Q::zero(), h, self.pl.at_lo) };
        }
        let head = Pl::constant(Q::zero(), d, self.pl.at_lo);
        let tail = self.pl.restrict(Q::zero(), h - d).shift(d);
        let mut pieces = head.pieces;
        pieces.extend(tail.pieces);
        Curve { pl: Pl { lo: Q::zero(), hi: h, at_lo: self.pl.at_lo, pieces }.normalize() }
    }

    /// `t -> f(t + d)`; the horizon shrinks by `d`.
    pub fn advance(&self, d: Q) -> Result<Curve, CurveError> {
        assert!(!d.is_negative());
        let h = self.horizon() - d;
        if !h.is_positive() {
            return Err(CurveError::HorizonExhausted { op: "advance", detail: format!("shift {d} >= horizon") });
        }
        if d.is_zero() {
            return Ok(self.clone());
        }
        Ok(Curve { pl: self.pl.restrict(d, self.horizon()).shift(-d) })
    }

    /// Pointwise `f <= g` over the common horizon, including right limits.
    pub fn le(&self, other: &Curve) -> bool {
        let h = self.horizon().min(other.horizon());
        let d = other.pl.restrict(Q::zero(), h).sub(&self.pl.restrict(Q::zero(), h));
        !d.min_value().is_negative()
    }
}

fn non_negative(name: &'static str, v: Q) -> Result<(), CurveError> {
    if v.is_negative() {
        Err(CurveError::NegativeParameter(name))
    } else {
        Ok(())
    }
}

/// `step * ceil((t - offset) / period)` for `t > offset`, zero before.
pub fn staircase(step: Q, period: Q, offset: Q, horizon: Q) -> Curve {
    let z = Q::zero();
    let mut pieces = vec![Piece { start: z, value: z, slope: z }];
    let mut k: i128 = 0;
    loop {
        let at = offset + period * Q::from(k);
        if at >= horizon {
            break;
        }
        let value = step * Q::from(k + 1);
        if at.is_zero() {
            pieces[0].value = value;
        } else {
            pieces.push(Piece { start: at, value, slope: z });
        }
        k += 1;
    }
    Curve { pl: Pl { lo: z, hi: horizon, at_lo: z, pieces }.normalize() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128) -> Q {
        Q::from(n)
    }

    #[test]
    fn staircase_counts_breakpoints() {
        let c = Curve::make(
            &CurveShape::Staircase { step: q(12_000), period: q(250_000), offset: q(0) },
            q(1_000_000),
        )
        .unwrap();
        assert_eq!(c.eval(q(500_001)).unwrap(), q(36_000));
        assert_eq!(c.eval(q(500_000)).unwrap(), q(24_000));
        assert_eq!(c.eval(q(0)).unwrap(), q(0));
    }

    #[test]
    fn leaky_bucket_jumps_at_origin() {
        let c = Curve::make(&CurveShape::LeakyBucket { b: q(90_000), r: Q::new(1, 50) }, q(10_000_000)).unwrap();
        assert_eq!(c.value_at_zero(), q(0));
        assert_eq!(c.eval_right(q(0)).unwrap(), q(90_000));
        assert_eq!(c.final_slope(), Q::new(1, 50));
    }

    #[test]
    fn zero_latency_rate_latency_is_a_line() {
        let c = Curve::make(&CurveShape::RateLatency { rate: q(3), latency: q(0) }, q(100)).unwrap();
        assert_eq!(c, Curve::rate(q(3), q(100)));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(
            Curve::make(&CurveShape::LeakyBucket { b: q(-1), r: q(0) }, q(10)),
            Err(CurveError::NegativeParameter("b"))
        );
        assert_eq!(Curve::make(&CurveShape::LeakyBucket { b: q(1), r: q(0) }, q(0)), Err(CurveError::NonPositiveHorizon));
        assert!(Curve::make(&CurveShape::Staircase { step: q(1), period: q(0), offset: q(0) }, q(10)).is_err());
    }

    #[test]
    fn evaluation_past_horizon_is_an_error() {
        let c = Curve::rate(q(1), q(10));
        assert!(matches!(c.eval(q(11)), Err(CurveError::BeyondHorizon { .. })));
    }

    #[test]
    fn delay_and_advance_are_shifts() {
        let c = Curve::rate(q(2), q(10));
        let d = c.delay(q(3));
        assert_eq!(d.eval(q(3)).unwrap(), q(0));
        assert_eq!(d.eval(q(5)).unwrap(), q(4));
        let a = c.advance(q(3)).unwrap();
        assert_eq!(a.horizon(), q(7));
        assert_eq!(a.eval(q(1)).unwrap(), q(8));
    }
}
