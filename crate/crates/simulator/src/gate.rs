//! Periodic transmission gates.

use tsn_minplus::Q;
use tsn_model::Ns;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    Always,
    Never,
    /// Open half-open intervals inside `[0, period)`, sorted and merged.
    Periodic { period: Ns, open: Vec<(Ns, Ns)> },
}

fn floor_div(t: Q, p: Ns) -> Ns {
    (t / Q::from(p)).floor().to_integer()
}

impl Gate {
    /// Gate open everywhere except the `closed` intervals (which may overlap).
    pub fn open_except(period: Ns, closed: &[(Ns, Ns)]) -> Self {
        let mut closed: Vec<(Ns, Ns)> = closed.iter().copied().filter(|&(a, b)| b > a).collect();
        closed.sort();
        let mut open = Vec::new();
        let mut at = 0;
        for (a, b) in closed {
            if a > at {
                open.push((at, a.min(period)));
            }
            at = at.max(b);
        }
        if at < period {
            open.push((at, period));
        }
        Self::periodic(period, open)
    }

    /// Gate open exactly on `open` (sorted, disjoint).
    pub fn periodic(period: Ns, mut open: Vec<(Ns, Ns)>) -> Self {
        open.retain(|&(a, b)| b > a);
        let mut merged: Vec<(Ns, Ns)> = Vec::new();
        for (a, b) in open {
            match merged.last_mut() {
                Some(last) if last.1 >= a => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        if merged.is_empty() {
            Gate::Never
        } else if merged == [(0, period)] {
            Gate::Always
        } else {
            Gate::Periodic { period, open: merged }
        }
    }

    /// `None` when closed at `t`; otherwise the next closing time (`None` for
    /// never).
    pub fn open_until(&self, t: Q) -> Option<Option<Q>> {
        match self {
            Gate::Always => Some(None),
            Gate::Never => None,
            Gate::Periodic { period, open } => {
                let k = floor_div(t, *period);
                let base = Q::from(k * period);
                let r = t - base;
                let &(_, b) = open.iter().find(|&&(a, b)| Q::from(a) <= r && r < Q::from(b))?;
                let wraps = b == *period && open[0].0 == 0;
                Some(Some(if wraps { base + Q::from(period + open[0].1) } else { base + Q::from(b) }))
            }
        }
    }

    /// First opening or closing strictly after `t`.
    pub fn next_change(&self, t: Q) -> Option<Q> {
        let Gate::Periodic { period, open } = self else { return None };
        let k = floor_div(t, *period);
        (k..k + 2)
            .flat_map(|c| open.iter().flat_map(move |&(a, b)| [c * period + a, c * period + b]))
            .map(Q::from)
            .find(|&x| x > t)
    }

    fn is_open(&self, t: Q) -> bool {
        self.open_until(t).is_some()
    }

    /// The gate opens or closes exactly at `t`. Windows have integer
    /// bounds, so half a nanosecond earlier is still the previous state.
    pub fn is_change(&self, t: Q) -> bool {
        matches!(self, Gate::Periodic { .. }) && t.is_integer() && self.is_open(t) != self.is_open(t - Q::new(1, 2))
    }

    /// Open intervals on `[from, to)`, wrap-around pieces joined.
    pub fn intervals(&self, from: Ns, to: Ns) -> Vec<(Q, Q)> {
        match self {
            Gate::Always => vec![(Q::from(from), Q::from(to))],
            Gate::Never => Vec::new(),
            Gate::Periodic { period, open } => {
                let mut out: Vec<(Q, Q)> = Vec::new();
                let mut k = from.div_euclid(*period);
                while k * period < to {
                    for &(a, b) in open {
                        let (a, b) = ((k * period + a).max(from), (k * period + b).min(to));
                        if a >= b {
                            continue;
                        }
                        match out.last_mut() {
                            Some(last) if last.1 == Q::from(a) => last.1 = Q::from(b),
                            _ => out.push((Q::from(a), Q::from(b))),
                        }
                    }
                    k += 1;
                }
                out
            }
        }
    }
}
