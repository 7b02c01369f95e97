use crate::curve::Curve;
use crate::pl::{envelope_all, Env, Pl};
use crate::{CurveError, Q};
use num_traits::{Signed, Zero};

fn common_horizon(x: &Curve, y: &Curve) -> Q {
    x.horizon().min(y.horizon())
}

/// `(x ⊗ y)(t) = inf_{0 <= s <= t} x(t - s) + y(s)`.
///
/// For fixed `t` the inner function is linear between breakpoints of either
/// operand, and at every breakpoint the attained value is no larger than the
/// one-sided limits, so the result is the lower envelope of shifted copies.
pub fn convolve(x: &Curve, y: &Curve) -> Result<Curve, CurveError> {
    let h = common_horizon(x, y);
    let (xp, yp) = (x.pl().restrict(Q::zero(), h), y.pl().restrict(Q::zero(), h));
    let mut terms = Vec::with_capacity(xp.pieces.len() + yp.pieces.len());
    for b in yp.starts() {
        terms.push(xp.restrict(Q::zero(), h - b).shift(b).affine(Q::from(1), yp.eval(b)));
    }
    for a in xp.starts() {
        terms.push(yp.restrict(Q::zero(), h - a).shift(a).affine(Q::from(1), xp.eval(a)));
    }
    let env = envelope_all(terms, Env::Min).ok_or(CurveError::Empty)?;
    Curve::from_pl(env)
}

/// `(x ⊘ y)(t) = sup_{u >= 0} x(t + u) - y(u)`.
///
/// Only `u <= H - t` is visible. The result is returned on the prefix of the
/// horizon where the supremum is reached before the visibility boundary; if
/// that prefix is empty the horizon is too short.
pub fn deconvolve(x: &Curve, y: &Curve) -> Result<Curve, CurveError> {
    let h = common_horizon(x, y);
    let (xp, yp) = (x.pl().restrict(Q::zero(), h), y.pl().restrict(Q::zero(), h));
    let one = Q::from(1);
    let mut terms = Vec::new();
    for b in yp.starts() {
        terms.push(xp.restrict(b, h).shift(-b).affine(one, -yp.eval(b)));
    }
    for a in xp.starts() {
        let xr = if a < h { xp.eval_right(a) } else { xp.eval(a) };
        if a.is_zero() {
            terms.push(Pl::point(Q::zero(), xr - yp.eval_right(Q::zero())));
            continue;
        }
        let mut t = yp.restrict(Q::zero(), a).reflect(a).affine(-one, xr);
        let at_u = xp.eval(a) - yp.eval(a);
        t.at_lo = if a < h { at_u.max(xr - yp.eval_right(a)) } else { at_u };
        terms.push(t);
    }
    let inner = envelope_all(terms, Env::Max).ok_or(CurveError::Empty)?;
    let boundary = yp.reflect(h).affine(-one, xp.eval(h));
    let cut = inner.sub(&boundary).first_negative();
    let valid = match cut {
        Some(t) if t.is_zero() => {
            return Err(CurveError::HorizonExhausted {
                op: "deconvolve",
                detail: format!("supremum lies beyond horizon {h}"),
            })
        }
        Some(t) => t,
        None => h,
    };
    let mut d = inner.restrict(Q::zero(), valid);
    if d.min_value().is_negative() {
        d = d.envelope(&Pl::constant(Q::zero(), valid, Q::zero()), Env::Max);
    }
    Curve::from_pl(d)
}

/// Largest horizontal distance `sup_t inf { d >= 0 : alpha(t) <= beta(t + d) }`.
pub fn horizontal_deviation(alpha: &Curve, beta: &Curve) -> Result<Q, CurveError> {
    let a = alpha.pl();
    let b = beta.pl();
    let exhausted = |t: Q| CurveError::HorizonExhausted {
        op: "horizontal_deviation",
        detail: format!("beta never reaches alpha({t}) within horizon {}", beta.horizon()),
    };
    // Between consecutive candidates alpha is linear and stays inside one band
    // of beta's levels, so the distance is linear there and peaks at an end.
    let mut cands: Vec<Q> = a.starts().chain(std::iter::once(a.hi)).collect();
    let mut levels = vec![b.at_lo];
    for (k, p) in b.pieces.iter().enumerate() {
        levels.push(p.value);
        let end = b.pieces.get(k + 1).map_or(b.hi, |n| n.start);
        levels.push(p.at(end));
    }
    for l in levels {
        cands.extend(a.inv_ge(l));
        cands.extend(a.inv_gt(l));
    }
    cands.sort();
    cands.dedup();
    let mut best = Q::zero();
    let mut best_at = Q::zero();
    for &c in &cands {
        let s = b.inv_ge(a.eval(c)).ok_or_else(|| exhausted(c))?;
        if s - c > best {
            best = s - c;
            best_at = c;
        }
        if c < a.hi {
            let v = a.eval_right(c);
            let s = if a.slope_right(c).is_positive() { b.inv_gt(v) } else { b.inv_ge(v) };
            let s = s.ok_or_else(|| exhausted(c))?;
            if s - c > best {
                best = s - c;
                best_at = c;
            }
        }
    }
    if best.is_positive() && best_at == a.hi {
        return Err(CurveError::HorizonExhausted {
            op: "horizontal_deviation",
            detail: "deviation still growing at the horizon".into(),
        });
    }
    Ok(best)
}

/// Largest vertical distance `sup_t alpha(t) - beta(t)`, clipped at 0.
pub fn vertical_deviation(alpha: &Curve, beta: &Curve) -> Result<Q, CurveError> {
    let h = common_horizon(alpha, beta);
    let d = alpha.pl().restrict(Q::zero(), h).sub(&beta.pl().restrict(Q::zero(), h));
    Ok(d.max_value().max(Q::zero()))
}

/// Output arrival bound `alpha ⊘ beta`, tightened to `min(sigma, (alpha ⊗ beta_max) ⊘ beta)`
/// when an upper service curve is known.
pub fn output_bound(
    alpha: &Curve,
    beta: &Curve,
    beta_max: Option<&Curve>,
    sigma: Option<&Curve>,
) -> Result<Curve, CurveError> {
    let Some(bmax) = beta_max else {
        return deconvolve(alpha, beta);
    };
    let out = deconvolve(&convolve(alpha, bmax)?, beta)?;
    Ok(match sigma {
        Some(s) => out.min(s),
        None => out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CurveShape;

    fn q(n: i128) -> Q {
        Q::from(n)
    }

    fn lb(b: i128, r: Q, h: i128) -> Curve {
        Curve::make(&CurveShape::LeakyBucket { b: q(b), r }, q(h)).unwrap()
    }

    fn rl(r: Q, t: i128, h: i128) -> Curve {
        Curve::make(&CurveShape::RateLatency { rate: r, latency: q(t) }, q(h)).unwrap()
    }

    const H: i128 = 10_000_000;

    #[test]
    fn leaky_bucket_rate_latency_closed_forms() {
        let a = lb(90_000, Q::new(1, 50), H);
        let b = rl(Q::new(3, 50), 100_000, H);
        assert_eq!(horizontal_deviation(&a, &b).unwrap(), q(1_600_000));
        assert_eq!(vertical_deviation(&a, &b).unwrap(), q(92_000));
        let c = convolve(&a, &b).unwrap();
        assert_eq!(c.eval(q(200_000)).unwrap(), q(6_000));
        let out = deconvolve(&a, &b).unwrap();
        // sup over u includes u = T at t = 0, so the value at the origin is b + rT as well
        assert_eq!(out.value_at_zero(), q(92_000));
        assert_eq!(out.segments(), vec![(q(0), q(92_000), Q::new(1, 50))]);
        assert_eq!(out.horizon(), q(H - 100_000));
    }

    #[test]
    fn identity_and_annihilator_cases() {
        let a = lb(500, Q::new(1, 4), 10_000);
        let z = Curve::zero(q(10_000));
        assert_eq!(convolve(&a, &z).unwrap(), z);
        let shifted = convolve(&a, &Curve::pure_delay(q(300), q(10_000))).unwrap();
        assert_eq!(shifted, a.delay(q(300)));
        let inf = Curve::infinite_server(q(10_000));
        assert_eq!(deconvolve(&a, &inf).unwrap(), a);
        assert_eq!(output_bound(&a, &inf, None, None).unwrap(), a);
        assert_eq!(horizontal_deviation(&a, &a).unwrap(), q(0));
        assert_eq!(vertical_deviation(&a, &a).unwrap(), q(0));
        assert_eq!(vertical_deviation(&z, &a).unwrap(), q(0));
    }

    #[test]
    fn dominating_service_gives_zero_delay() {
        let a = lb(100, q(1), 1_000);
        let b = Curve::make(&CurveShape::AffinePieces(vec![(q(0), q(200), q(2))]), q(1_000)).unwrap();
        assert_eq!(horizontal_deviation(&a, &b).unwrap(), q(0));
    }

    #[test]
    fn unstable_pair_exhausts_the_horizon() {
        let a = lb(100, q(2), 1_000);
        let b = rl(q(1), 10, 1_000);
        assert!(matches!(deconvolve(&a, &b), Err(CurveError::HorizonExhausted { .. })));
        assert!(matches!(horizontal_deviation(&a, &b), Err(CurveError::HorizonExhausted { .. })));
    }

    #[test]
    fn tightened_output_bound_is_below_sigma() {
        let a = lb(1_000, Q::new(1, 10), 100_000);
        let b = rl(q(1), 500, 100_000);
        let bmax = Curve::rate(q(1), q(100_000));
        let out = output_bound(&a, &b, Some(&bmax), Some(&a)).unwrap();
        assert!(out.le(&a));
    }
}
