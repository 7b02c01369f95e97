use crate::paths::{norm, path_links};
use crate::{cost, k_disjoint_paths, Cost, CostBreakdown, RoutingError, RoutingProblem, RoutingSolution};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use tsn_minplus::Q;
use tsn_model::FlowSpec;

fn bandwidth(m: &FlowSpec) -> Q {
    Q::new(m.size_bits(), m.period_ns.max(1))
}

fn finish(
    p: &RoutingProblem,
    links: BTreeSet<(String, String)>,
    routes: BTreeMap<String, Vec<Vec<String>>>,
) -> Result<RoutingSolution, RoutingError> {
    let mut bridges = BTreeMap::new();
    for c in &p.bridges {
        let deg = links.iter().filter(|(a, b)| *a == c.id || *b == c.id).count();
        if deg > 0 {
            let kind = p.label(&c.id, deg).ok_or_else(|| RoutingError::PortsExceeded(c.id.clone()))?;
            bridges.insert(c.id.clone(), kind.kind.clone());
        }
    }
    let mut s = RoutingSolution {
        bridges,
        links,
        routes,
        cost: CostBreakdown { c_cost: Q::zero(), c_hops: 0, c_overlap: Cost::Infinite, total: Cost::Infinite },
        inactive: BTreeSet::new(),
        failures: Vec::new(),
    };
    s.cost = cost(&s, p);
    Ok(s)
}

/// One greedy pass over the candidate graph without the `forbidden` bridges.
/// Arc weights are marginal costs: `α` per hop, the link cost for a link not
/// yet retained, and the cheapest allowed kind for a bridge not yet in use.
fn greedy(p: &RoutingProblem, forbidden: &BTreeSet<String>) -> Result<RoutingSolution, RoutingError> {
    let g = p.candidate_graph();
    let entry: BTreeMap<&str, (Q, usize)> = p
        .bridges
        .iter()
        .map(|c| {
            let cheapest = p.allowed(&c.id).iter().map(|b| b.cost).min().unwrap_or(0);
            (c.id.as_str(), (Q::from(cheapest as i128), p.max_ports(&c.id) as usize))
        })
        .collect();
    let mut links: BTreeSet<(String, String)> = BTreeSet::new();
    let mut routes: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut order: Vec<&FlowSpec> = p.messages.iter().collect();
    order.sort_by(|a, b| bandwidth(b).cmp(&bandwidth(a)).then_with(|| a.id.cmp(&b.id)));
    for m in order {
        if m.tolerance == 0 {
            return Err(RoutingError::BadParameter(format!("message `{}` has tolerance 0", m.id)));
        }
        for dst in &m.dst {
            if *dst == m.src {
                return Err(RoutingError::BadParameter(format!("message `{}` has source = destination", m.id)));
            }
            let res = k_disjoint_paths(&g, &m.src, dst, m.tolerance as usize, p.congestion, |acc, u, v| {
                if forbidden.contains(u) || forbidden.contains(v) {
                    return None;
                }
                let mut all = links.clone();
                all.extend(acc.iter().flat_map(|r| path_links(r)));
                let deg = |x: &str| all.iter().filter(|(a, b)| a == x || b == x).count();
                let mut w = p.alpha;
                if !all.contains(&norm(u, v)) {
                    for x in [u, v] {
                        if entry.get(x).is_some_and(|&(_, ports)| deg(x) >= ports) {
                            return None;
                        }
                    }
                    w += p.link_cost;
                }
                if let Some(&(c, _)) = entry.get(v) {
                    if deg(v) == 0 {
                        w += c;
                    }
                }
                Some(w)
            })?;
            if !res.complete {
                return Err(RoutingError::Infeasible {
                    message: m.id.clone(),
                    destination: dst.clone(),
                    needed: m.tolerance as usize,
                    found: res.paths.len(),
                });
            }
            for r in &res.paths {
                links.extend(path_links(r));
            }
            routes.entry(m.id.clone()).or_default().extend(res.paths);
        }
    }
    finish(p, links, routes)
}

/// Greedy synthesis followed by improvement passes: each retained bridge,
/// most expensive first, is banned and everything rerouted; the change is
/// kept when the total cost drops and stays finite.
pub fn synthesize_topology(p: &RoutingProblem) -> Result<RoutingSolution, RoutingError> {
    p.validate()?;
    let mut banned = BTreeSet::new();
    let mut best = greedy(p, &banned)?;
    'improve: loop {
        let kind_cost = |k: &str| p.library.iter().find(|b| b.kind == k).map_or(0, |b| b.cost);
        let mut order: Vec<(i64, String)> = best.bridges.iter().map(|(b, k)| (-kind_cost(k), b.clone())).collect();
        order.sort();
        for (_, b) in order {
            let mut trial = banned.clone();
            trial.insert(b);
            if let Ok(s) = greedy(p, &trial) {
                if s.cost.total != Cost::Infinite && s.cost.total < best.cost.total {
                    best = s;
                    banned = trial;
                    continue 'improve;
                }
            }
        }
        return Ok(best);
    }
}

/// Network-level redundancy: the tolerance-1 synthesis duplicated once per
/// required route, each copy with its own bridges (`B1.1`, `B1.2`, ...) and
/// carrying every message.
pub fn nlr_baseline(p: &RoutingProblem) -> Result<RoutingSolution, RoutingError> {
    let copies = p.messages.iter().map(|m| m.tolerance).max().unwrap_or(1).max(1);
    let mut single = p.clone();
    for m in &mut single.messages {
        m.tolerance = 1;
    }
    let base = synthesize_topology(&single)?;
    let mut links = BTreeSet::new();
    let mut routes: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut bridges = BTreeMap::new();
    for c in 1..=copies {
        let name = |x: &String| if base.bridges.contains_key(x) { format!("{x}.{c}") } else { x.clone() };
        for (b, k) in &base.bridges {
            bridges.insert(name(b), k.clone());
        }
        for (a, b) in &base.links {
            links.insert(norm(&name(a), &name(b)));
        }
        for (id, rs) in &base.routes {
            routes.entry(id.clone()).or_default().extend(rs.iter().map(|r| r.iter().map(name).collect::<Vec<_>>()));
        }
    }
    let mut s = RoutingSolution { bridges, links, routes, cost: base.cost, inactive: BTreeSet::new(), failures: Vec::new() };
    s.cost = cost(&s, p);
    Ok(s)
}
