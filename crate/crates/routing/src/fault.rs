use crate::paths::{norm, path_links};
use crate::{cost, k_disjoint_paths, Element, Graph, RoutingError, RoutingProblem, RoutingSolution};
use std::collections::BTreeSet;
use tsn_minplus::Q;

/// A destination a message can no longer reach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryFailure {
    pub message: String,
    pub destination: String,
    pub failed: Element,
}

fn dead(s: &RoutingSolution, a: &str, b: &str) -> bool {
    s.inactive.contains(&Element::link(a, b))
        || s.inactive.contains(&Element::Bridge(a.into()))
        || s.inactive.contains(&Element::Bridge(b.into()))
}

fn alive(s: &RoutingSolution, r: &[String]) -> bool {
    r.windows(2).all(|w| !dead(s, &w[0], &w[1]))
}

/// Marks `failed` inactive and drops every route through it. A destination
/// that lost routes is topped up towards the message's tolerance with
/// link-disjoint detours over the surviving retained elements only; the
/// topology itself never changes. Destinations left with no route get a
/// [`DeliveryFailure`].
pub fn inject_fault_and_reroute(
    s: &RoutingSolution,
    failed: &Element,
    p: &RoutingProblem,
) -> Result<RoutingSolution, RoutingError> {
    if !s.retains(failed) {
        return Err(RoutingError::NotRetained(failed.to_string()));
    }
    let mut out = s.clone();
    out.inactive.insert(failed.clone());

    let mut nodes: Vec<(String, bool)> = p.ecus.iter().map(|e| (e.clone(), false)).collect();
    nodes.extend(out.bridges.keys().filter(|b| !out.inactive.contains(&Element::Bridge((*b).clone()))).map(|b| (b.clone(), true)));
    let edges: Vec<(String, String)> = out.links.iter().filter(|(a, b)| !dead(&out, a, b)).cloned().collect();
    let nodes: Vec<(String, bool)> = {
        let mut v = nodes;
        // keep link endpoints that are not ECUs of this problem, e.g. duplicated bridges
        for (a, b) in &edges {
            for x in [a, b] {
                if !v.iter().any(|n| &n.0 == x) {
                    v.push((x.clone(), true));
                }
            }
        }
        v
    };
    let g = Graph::new(nodes, &edges)?;

    for m in &p.messages {
        let Some(old) = s.routes.get(&m.id) else { continue };
        let mut kept: Vec<Vec<String>> = Vec::new();
        for dst in &m.dst {
            let mine: Vec<&Vec<String>> = old.iter().filter(|r| r.last() == Some(dst)).collect();
            let mut survivors: Vec<Vec<String>> = mine.iter().filter(|r| alive(&out, r)).map(|r| (*r).clone()).collect();
            let want = (m.tolerance as usize).max(1);
            if survivors.len() < mine.len() && survivors.len() < want {
                let taken: BTreeSet<(String, String)> = survivors.iter().flat_map(|r| path_links(r)).collect();
                if g.index(&m.src).is_ok() && g.index(dst).is_ok() {
                    let extra = k_disjoint_paths(&g, &m.src, dst, want - survivors.len(), p.congestion, |_, u, v| {
                        (!taken.contains(&norm(u, v))).then_some(Q::from(1))
                    })?;
                    survivors.extend(extra.paths);
                }
            }
            if survivors.is_empty() {
                out.failures.push(DeliveryFailure { message: m.id.clone(), destination: dst.clone(), failed: failed.clone() });
            }
            kept.extend(survivors);
        }
        if kept.is_empty() {
            out.routes.remove(&m.id);
        } else {
            out.routes.insert(m.id.clone(), kept);
        }
    }
    out.cost = cost(&out, p);
    Ok(out)
}

/// Result of failing one link.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultOutcome {
    pub failed: Element,
    /// Every message with tolerance ≥ 2 kept at least one original route per
    /// destination untouched.
    pub intact: bool,
    pub failures: Vec<DeliveryFailure>,
    pub after: RoutingSolution,
}

/// Fails each retained link in turn.
pub fn fault_sweep(s: &RoutingSolution, p: &RoutingProblem) -> Result<Vec<FaultOutcome>, RoutingError> {
    let mut out = Vec::new();
    for (a, b) in &s.links {
        let e = Element::link(a, b);
        let after = inject_fault_and_reroute(s, &e, p)?;
        let intact = p.messages.iter().filter(|m| m.tolerance >= 2).all(|m| {
            let old = s.routes.get(&m.id).map(Vec::as_slice).unwrap_or(&[]);
            m.dst.iter().all(|d| {
                old.iter().any(|r| r.last() == Some(d) && !path_links(r).any(|l| l == (a.clone(), b.clone())))
            })
        });
        out.push(FaultOutcome { failed: e, intact, failures: after.failures.clone(), after });
    }
    Ok(out)
}
