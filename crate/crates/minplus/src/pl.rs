//! Left-continuous piecewise-linear functions on a closed interval `[lo, hi]`.
//!
//! A piece covers `(start, next_start]`; `value` is the right limit at
//! `start`. The value exactly at `lo` is stored separately in `at_lo`, so a
//! jump at the origin (a burst) is representable.

use crate::Q;
use num_traits::{Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Piece {
    pub start: Q,
    pub value: Q,
    pub slope: Q,
}

impl Piece {
    pub fn at(&self, t: Q) -> Q {
        self.value + self.slope * (t - self.start)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pl {
    pub lo: Q,
    pub hi: Q,
    pub at_lo: Q,
    pub pieces: Vec<Piece>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Env {
    Min,
    Max,
}

impl Env {
    fn pick(self, a: Q, b: Q) -> Q {
        match self {
            Env::Min => a.min(b),
            Env::Max => a.max(b),
        }
    }

    // true when `a` should win over `b` just to the right of the comparison point
    fn prefers(self, va: Q, sa: Q, vb: Q, sb: Q) -> bool {
        match self {
            Env::Min => va < vb || (va == vb && sa <= sb),
            Env::Max => va > vb || (va == vb && sa >= sb),
        }
    }
}

impl Pl {
    pub fn point(t: Q, v: Q) -> Pl {
        Pl { lo: t, hi: t, at_lo: v, pieces: Vec::new() }
    }

    pub fn linear(lo: Q, hi: Q, v0: Q, slope: Q) -> Pl {
        if lo == hi {
            return Pl::point(lo, v0);
        }
        Pl { lo, hi, at_lo: v0, pieces: vec![Piece { start: lo, value: v0, slope }] }
    }

    pub fn constant(lo: Q, hi: Q, v: Q) -> Pl {
        Pl::linear(lo, hi, v, Q::zero())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Structural check used by constructors and debug assertions.
    pub fn well_formed(&self) -> bool {
        if self.lo > self.hi {
            return false;
        }
        if self.is_point() {
            return self.pieces.is_empty();
        }
        if self.pieces.is_empty() || self.pieces[0].start != self.lo {
            return false;
        }
        self.pieces.windows(2).all(|w| w[0].start < w[1].start)
            && self.pieces.last().map_or(false, |p| p.start < self.hi)
    }

    fn end_of(&self, k: usize) -> Q {
        self.pieces.get(k + 1).map_or(self.hi, |p| p.start)
    }

    // last piece with start < t, for lo < t <= hi
    fn idx_left(&self, t: Q) -> usize {
        self.pieces.partition_point(|p| p.start < t).saturating_sub(1)
    }

    // last piece with start <= t, for lo <= t < hi
    fn idx_right(&self, t: Q) -> usize {
        self.pieces.partition_point(|p| p.start <= t).saturating_sub(1)
    }

    /// Value at `t` (left-continuous). Caller guarantees `lo <= t <= hi`.
    pub fn eval(&self, t: Q) -> Q {
        debug_assert!(t >= self.lo && t <= self.hi);
        if t == self.lo {
            self.at_lo
        } else {
            self.pieces[self.idx_left(t)].at(t)
        }
    }

    /// Right limit at `t`, for `lo <= t < hi`.
    pub fn eval_right(&self, t: Q) -> Q {
        debug_assert!(t >= self.lo && t < self.hi);
        self.pieces[self.idx_right(t)].at(t)
    }

    /// Slope just right of `t`, for `lo <= t < hi`.
    pub fn slope_right(&self, t: Q) -> Q {
        self.pieces[self.idx_right(t)].slope
    }

    pub fn end_value(&self) -> Q {
        self.eval(self.hi)
    }

    pub fn starts(&self) -> impl Iterator<Item = Q> + '_ {
        self.pieces.iter().map(|p| p.start)
    }

    /// `t -> f(t - d)`.
    pub fn shift(&self, d: Q) -> Pl {
        Pl {
            lo: self.lo + d,
            hi: self.hi + d,
            at_lo: self.at_lo,
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece { start: p.start + d, ..*p })
                .collect(),
        }
    }

    /// `t -> k * f(t) + c`.
    pub fn affine(&self, k: Q, c: Q) -> Pl {
        Pl {
            lo: self.lo,
            hi: self.hi,
            at_lo: k * self.at_lo + c,
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece { start: p.start, value: k * p.value + c, slope: k * p.slope })
                .collect(),
        }
    }

    /// `t -> f((a - t)+)` on `[a - hi, a - lo]`, kept left-continuous in `t`.
    pub fn reflect(&self, a: Q) -> Pl {
        if self.is_point() {
            return Pl::point(a - self.lo, self.at_lo);
        }
        let n = self.pieces.len();
        let mut pieces = Vec::with_capacity(n);
        for k in (0..n).rev() {
            let end = self.end_of(k);
            let p = self.pieces[k];
            pieces.push(Piece { start: a - end, value: p.at(end), slope: -p.slope });
        }
        Pl { lo: a - self.hi, hi: a - self.lo, at_lo: self.end_value(), pieces }
    }

    /// Restriction to `[lo2, hi2]`, which must lie inside the domain.
    pub fn restrict(&self, lo2: Q, hi2: Q) -> Pl {
        debug_assert!(self.lo <= lo2 && lo2 <= hi2 && hi2 <= self.hi);
        if lo2 == hi2 {
            return Pl::point(lo2, self.eval(lo2));
        }
        let first = self.idx_right(lo2);
        let mut pieces = Vec::new();
        let p = self.pieces[first];
        pieces.push(Piece { start: lo2, value: p.at(lo2), slope: p.slope });
        for p in &self.pieces[first + 1..] {
            if p.start >= hi2 {
                break;
            }
            pieces.push(*p);
        }
        Pl { lo: lo2, hi: hi2, at_lo: self.eval(lo2), pieces }
    }

    /// Merges collinear continuous neighbours so equal functions compare equal.
    pub fn normalize(mut self) -> Pl {
        let mut out: Vec<Piece> = Vec::with_capacity(self.pieces.len());
        for p in self.pieces.drain(..) {
            if let Some(last) = out.last() {
                if last.slope == p.slope && last.at(p.start) == p.value {
                    continue;
                }
            }
            out.push(p);
        }
        self.pieces = out;
        self
    }

    /// Pointwise sum over the common domain.
    pub fn add(&self, other: &Pl) -> Pl {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        assert!(lo <= hi, "disjoint domains");
        if lo == hi {
            return Pl::point(lo, self.eval(lo) + other.eval(lo));
        }
        let cuts = merged_cuts(self, other, lo, hi);
        let pieces = cuts
            .iter()
            .map(|&t| Piece {
                start: t,
                value: self.eval_right(t) + other.eval_right(t),
                slope: self.slope_right(t) + other.slope_right(t),
            })
            .collect();
        Pl { lo, hi, at_lo: self.eval(lo) + other.eval(lo), pieces }.normalize()
    }

    pub fn sub(&self, other: &Pl) -> Pl {
        self.add(&other.affine(-Q::from(1), Q::zero()))
    }

    /// Pointwise min or max; one domain must contain the other.
    pub fn envelope(&self, other: &Pl, op: Env) -> Pl {
        let (outer, inner) = if self.lo <= other.lo && other.hi <= self.hi {
            (self, other)
        } else {
            assert!(other.lo <= self.lo && self.hi <= other.hi, "domains not nested");
            (other, self)
        };
        let (l, r) = (inner.lo, inner.hi);
        let at_lo = if l == outer.lo { op.pick(outer.at_lo, inner.at_lo) } else { outer.at_lo };
        if outer.is_point() {
            return Pl::point(outer.lo, at_lo);
        }
        let mut pieces: Vec<Piece> = Vec::new();
        for p in &outer.pieces {
            if p.start >= l {
                break;
            }
            pieces.push(*p);
        }
        if l < r {
            let cuts = merged_cuts(outer, inner, l, r);
            for (i, &p) in cuts.iter().enumerate() {
                let q = cuts.get(i + 1).copied().unwrap_or(r);
                let (va, sa) = (outer.eval_right(p), outer.slope_right(p));
                let (vb, sb) = (inner.eval_right(p), inner.slope_right(p));
                let (first, second) = if op.prefers(va, sa, vb, sb) {
                    ((va, sa), (vb, sb))
                } else {
                    ((vb, sb), (va, sa))
                };
                pieces.push(Piece { start: p, value: first.0, slope: first.1 });
                if first.1 != second.1 {
                    let t = p + (second.0 - first.0) / (first.1 - second.1);
                    let crosses = match op {
                        Env::Min => second.1 < first.1,
                        Env::Max => second.1 > first.1,
                    };
                    if crosses && t > p && t < q {
                        pieces.push(Piece { start: t, value: second.0 + second.1 * (t - p), slope: second.1 });
                    }
                }
            }
        }
        if r < outer.hi {
            let k = outer.idx_right(r);
            let p = outer.pieces[k];
            pieces.push(Piece { start: r, value: p.at(r), slope: p.slope });
            pieces.extend_from_slice(&outer.pieces[k + 1..]);
        }
        Pl { lo: outer.lo, hi: outer.hi, at_lo, pieces }.normalize()
    }

    /// `inf { s : f(s) >= v }` for a non-decreasing function.
    pub fn inv_ge(&self, v: Q) -> Option<Q> {
        if self.at_lo >= v {
            return Some(self.lo);
        }
        for (k, p) in self.pieces.iter().enumerate() {
            if p.value >= v {
                return Some(p.start);
            }
            let end = self.end_of(k);
            if p.slope.is_positive() && p.at(end) >= v {
                return Some(p.start + (v - p.value) / p.slope);
            }
        }
        None
    }

    /// `inf { s : f(s) > v }` for a non-decreasing function.
    pub fn inv_gt(&self, v: Q) -> Option<Q> {
        if self.at_lo > v {
            return Some(self.lo);
        }
        for (k, p) in self.pieces.iter().enumerate() {
            if p.value > v {
                return Some(p.start);
            }
            let end = self.end_of(k);
            if p.slope.is_positive() && p.at(end) > v {
                return Some(p.start + (v - p.value) / p.slope);
            }
        }
        None
    }

    /// Running supremum `t -> sup_{lo <= u <= t} f(u)`.
    pub fn running_sup(&self) -> Pl {
        if self.is_point() {
            return self.clone();
        }
        let mut best = self.at_lo;
        let mut pieces = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            let end = self.end_of(k);
            let v_end = p.at(end);
            if !p.slope.is_positive() {
                pieces.push(Piece { start: p.start, value: best.max(p.value), slope: Q::zero() });
            } else if p.value >= best {
                pieces.push(*p);
            } else if v_end > best {
                let cross = p.start + (best - p.value) / p.slope;
                pieces.push(Piece { start: p.start, value: best, slope: Q::zero() });
                pieces.push(Piece { start: cross, value: best, slope: p.slope });
            } else {
                pieces.push(Piece { start: p.start, value: best, slope: Q::zero() });
            }
            best = best.max(p.value).max(v_end);
        }
        Pl { lo: self.lo, hi: self.hi, at_lo: self.at_lo, pieces }.normalize()
    }

    /// First `t` at which the function becomes strictly negative, if any.
    pub fn first_negative(&self) -> Option<Q> {
        if self.at_lo.is_negative() {
            return Some(self.lo);
        }
        for (k, p) in self.pieces.iter().enumerate() {
            if p.value.is_negative() {
                return Some(p.start);
            }
            let end = self.end_of(k);
            if p.slope.is_negative() && p.at(end).is_negative() {
                return Some(p.start + p.value / -p.slope);
            }
        }
        None
    }

    pub fn min_value(&self) -> Q {
        let mut m = self.at_lo;
        for (k, p) in self.pieces.iter().enumerate() {
            m = m.min(p.value).min(p.at(self.end_of(k)));
        }
        m
    }

    pub fn max_value(&self) -> Q {
        let mut m = self.at_lo;
        for (k, p) in self.pieces.iter().enumerate() {
            m = m.max(p.value).max(p.at(self.end_of(k)));
        }
        m
    }
}

fn merged_cuts(a: &Pl, b: &Pl, lo: Q, hi: Q) -> Vec<Q> {
    let mut cuts: Vec<Q> = std::iter::once(lo)
        .chain(a.starts().filter(|&t| t > lo && t < hi))
        .chain(b.starts().filter(|&t| t > lo && t < hi))
        .collect();
    cuts.sort();
    cuts.dedup();
    cuts
}

/// Pairwise tournament reduction; keeps intermediate domains nested.
pub fn envelope_all(mut terms: Vec<Pl>, op: Env) -> Option<Pl> {
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len() / 2 + 1);
        let mut it = terms.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.envelope(&b, op)),
                None => next.push(a),
            }
        }
        terms = next;
    }
    terms.pop()
}
