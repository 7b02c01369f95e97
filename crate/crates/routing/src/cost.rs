use crate::{RoutingProblem, RoutingSolution};
use num_traits::Zero;
use std::collections::BTreeMap;
use tsn_gclsynth::{first_fit, synthesize, GateSpec, Problem};
use tsn_minplus::Q;

/// A cost that may be infinite. `Finite` orders below `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cost {
    Finite(Q),
    Infinite,
}

impl std::ops::Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        match (self, o) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }
}

impl std::fmt::Display for Cost {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cost::Finite(q) => write!(f, "{q}"),
            Cost::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub c_cost: Q,
    pub c_hops: i128,
    pub c_overlap: Cost,
    pub total: Cost,
}

/// `C = C_cost + α·C_hops + C_overlap`. Bridges are charged at their labeled
/// kind, links at the problem's link cost.
pub fn cost(s: &RoutingSolution, p: &RoutingProblem) -> CostBreakdown {
    let kind_cost = |k: &str| p.library.iter().find(|b| b.kind == k).map_or(0, |b| b.cost);
    let c_cost = s.bridges.values().map(|k| Q::from(kind_cost(k) as i128)).sum::<Q>()
        + p.link_cost * Q::from(s.links.len() as i128);
    let c_hops: i128 = s.routes.values().flatten().map(|r| r.len() as i128 - 1).sum();
    let c_overlap = if overlap_free(s, p) { Cost::Finite(Q::zero()) } else { Cost::Infinite };
    CostBreakdown { c_cost, c_hops, total: Cost::Finite(c_cost + p.alpha * Q::from(c_hops)) + c_overlap, c_overlap }
}

/// Whether every directed port can give each crossing message an exclusive
/// window of one frame time per period, at full length. A quick first-fit
/// placement is tried first; ports with at most four messages that it cannot
/// place get the exact search. Larger ports it fails on count as overlapping.
pub fn overlap_free(s: &RoutingSolution, p: &RoutingProblem) -> bool {
    let mut ports: BTreeMap<(&str, &str), Vec<GateSpec>> = BTreeMap::new();
    for m in &p.messages {
        let Some(routes) = s.routes.get(&m.id) else { continue };
        let len = (m.size_bits() * 1000 + p.rate_mbps as i128 - 1) / p.rate_mbps as i128;
        for r in routes {
            for w in r.windows(2) {
                let gates = ports.entry((&w[0], &w[1])).or_default();
                if !gates.iter().any(|g| g.id == m.id) {
                    gates.push(GateSpec::new(&m.id, m.period_ns, len.max(1)));
                }
            }
        }
    }
    ports.values().all(|gates| {
        if gates.iter().any(|g| g.length > g.period) {
            return false;
        }
        if first_fit(gates).is_some() {
            return true;
        }
        if gates.len() > 4 {
            return false;
        }
        let mut prob = Problem::new(gates.clone());
        prob.eta_max = (1, 1);
        synthesize(&prob).is_ok_and(|sch| sch.eta >= Q::from(1))
    })
}
