//! Gate-control-list synthesis: place periodic gate openings so that no two
//! gates sharing a slot are ever open at once, stretching every opening by the
//! largest common factor `η`.
//!
//! Times are integer ns on input; synthesized starts and `η` are exact
//! rationals.

mod fit;
mod refine;
mod search;
mod verify;

pub use fit::first_fit;
pub use verify::{verify_schedule, Overlap};

use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use tsn_minplus::Q;

pub type Ns = i128;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub id: String,
    pub period: Ns,
    pub length: Ns,
    /// Allowed start times as half-open intervals inside `[0, period)`.
    pub domain: Vec<(Ns, Ns)>,
    /// Slots the gate may be assigned to; empty means any.
    #[serde(default)]
    pub slots: Vec<usize>,
}

impl GateSpec {
    /// Gate that may start anywhere in its period.
    pub fn new(id: &str, period: Ns, length: Ns) -> Self {
        GateSpec { id: id.into(), period, length, domain: vec![(0, period)], slots: Vec::new() }
    }

    fn validate(&self) -> Result<(), GclError> {
        let bad = |reason: &str| GclError::BadGate { id: self.id.clone(), reason: reason.into() };
        if self.period <= 0 {
            return Err(bad("period must be positive"));
        }
        if self.length <= 0 || self.length > self.period {
            return Err(bad("length must lie in (0, period]"));
        }
        if self.domain.is_empty() {
            return Err(bad("empty start domain"));
        }
        if self.domain.iter().any(|&(lo, hi)| lo < 0 || hi > self.period || lo >= hi) {
            return Err(bad("start domain must be non-empty intervals inside [0, period)"));
        }
        Ok(())
    }
}

/// Gates that may never share a slot, by id.
pub type Pair = (String, String);

/// Pairs that may not both sit anywhere inside one group of slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub slots: Vec<usize>,
    pub pairs: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub gates: Vec<GateSpec>,
    /// Number of hyperperiod slots; gates in different slots never conflict.
    pub slots: usize,
    #[serde(default)]
    pub exclusive: Vec<Pair>,
    #[serde(default)]
    pub clusters: Vec<Cluster>,
    /// Upper cap on the reported stretch, as `numerator / denominator`.
    pub eta_max: (i128, i128),
    /// Start-time grid of the search.
    pub step: Ns,
}

pub const MAX_GATES: usize = 16;

impl Problem {
    /// One slot, no exclusions, `η ≤ 4`, 1 µs grid.
    pub fn new(gates: Vec<GateSpec>) -> Self {
        Problem { gates, slots: 1, exclusive: Vec::new(), clusters: Vec::new(), eta_max: (4, 1), step: 1000 }
    }

    pub fn eta_cap(&self) -> Q {
        Q::new(self.eta_max.0, self.eta_max.1)
    }

    fn index(&self, id: &str) -> Result<usize, GclError> {
        self.gates.iter().position(|g| g.id == id).ok_or_else(|| GclError::UnknownGate(id.into()))
    }

    fn validate(&self) -> Result<(), GclError> {
        if self.gates.is_empty() {
            return Err(GclError::NoGates);
        }
        if self.gates.len() > MAX_GATES {
            return Err(GclError::TooManyGates(self.gates.len()));
        }
        if self.slots == 0 || self.step <= 0 || self.eta_max.0 <= 0 || self.eta_max.1 <= 0 {
            return Err(GclError::BadParameter("slots, step and eta_max must be positive".into()));
        }
        for (k, g) in self.gates.iter().enumerate() {
            g.validate()?;
            if self.gates[..k].iter().any(|o| o.id == g.id) {
                return Err(GclError::BadGate { id: g.id.clone(), reason: "duplicate id".into() });
            }
            if g.slots.iter().any(|&s| s >= self.slots) {
                return Err(GclError::BadGate { id: g.id.clone(), reason: "slot out of range".into() });
            }
        }
        for (a, b) in self.exclusive.iter().chain(self.clusters.iter().flat_map(|c| c.pairs.iter())) {
            self.index(a)?;
            self.index(b)?;
        }
        Ok(())
    }
}

/// A gate with its opening fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placed {
    pub period: Ns,
    pub length: Q,
    pub start: Q,
}

pub(crate) fn rem(x: Q, m: Q) -> Q {
    x - m * (x / m).floor()
}

/// `L_i ≤ (t_j - t_i) mod g ≤ g - L_j` with `g = gcd(T_i, T_j)`.
pub fn check_nonoverlap(i: &Placed, j: &Placed) -> bool {
    let g = Q::from(i.period.gcd(&j.period));
    let d = rem(j.start - i.start, g);
    i.length <= d && d <= g - j.length
}

/// Largest stretch of both lengths that keeps the pair apart.
pub(crate) fn pair_eta(ti: Q, li: Ns, tj: Q, lj: Ns, g: Ns) -> Q {
    let g = Q::from(g);
    let d = rem(tj - ti, g);
    if d.is_zero() {
        return Q::zero();
    }
    (d / Q::from(li)).min((g - d) / Q::from(lj))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub id: String,
    pub start: Q,
    pub slot: usize,
}

/// `q = ⌊(t_b - t_a) / g⌋` for a pair sharing a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    pub a: String,
    pub b: String,
    pub q: i128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateSchedule {
    pub placements: Vec<Placement>,
    pub eta: Q,
    pub quotients: Vec<Quotient>,
}

impl GateSchedule {
    /// `η < 1`: the gates only fit with shortened budgets.
    pub fn shortened(&self) -> bool {
        self.eta < Q::from(1)
    }

    pub fn placed(&self, gates: &[GateSpec], k: usize) -> Placed {
        let p = &self.placements[k];
        let g = gates.iter().find(|g| g.id == p.id).expect("schedule matches gates");
        Placed { period: g.period, length: self.eta * Q::from(g.length), start: p.start }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GclError {
    #[error("no gates to schedule")]
    NoGates,
    #[error("{0} gates exceed the exact-search limit of {MAX_GATES}")]
    TooManyGates(usize),
    #[error("gate `{id}`: {reason}")]
    BadGate { id: String, reason: String },
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("{0}")]
    BadParameter(String),
    #[error("no slot assignment satisfies the exclusion constraints")]
    NoSlotAssignment,
    #[error("infeasible: gates `{a}` and `{b}` cannot be separated")]
    Infeasible { a: String, b: String },
    #[error("hyperperiod {0} ns too long to enumerate; use a coarser time base")]
    LcmOverflow(String),
}

/// Maximizes `η` over slot assignments and grid start times, then moves the
/// starts off the grid to the exact optimum of the chosen arrangement.
pub fn synthesize(p: &Problem) -> Result<GateSchedule, GclError> {
    p.validate()?;
    let grid = search::best_on_grid(p)?;
    if grid.eta.is_zero() {
        let (a, b) = grid.blocking.expect("zero stretch comes from a pair");
        return Err(GclError::Infeasible { a: p.gates[a].id.clone(), b: p.gates[b].id.clone() });
    }
    let starts = refine::refine(p, &grid).unwrap_or_else(|| (grid.starts.iter().map(|&t| Q::from(t)).collect(), grid.eta));
    Ok(build(p, &grid.slots, starts.0, starts.1))
}

fn build(p: &Problem, slots: &[usize], starts: Vec<Q>, eta: Q) -> GateSchedule {
    let placements = p
        .gates
        .iter()
        .zip(slots)
        .zip(&starts)
        .map(|((g, &slot), &start)| Placement { id: g.id.clone(), start, slot })
        .collect();
    let mut quotients = Vec::new();
    for i in 0..p.gates.len() {
        for j in i + 1..p.gates.len() {
            if slots[i] == slots[j] {
                let g = Q::from(p.gates[i].period.gcd(&p.gates[j].period));
                quotients.push(Quotient {
                    a: p.gates[i].id.clone(),
                    b: p.gates[j].id.clone(),
                    q: ((starts[j] - starts[i]) / g).floor().to_integer(),
                });
            }
        }
    }
    GateSchedule { placements, eta, quotients }
}
