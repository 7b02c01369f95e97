//! Exact stretch for a fixed arrangement. With slots and the quotients
//! `q_ij` of the grid optimum held fixed, non-overlap is a system of
//! difference constraints `t_v - t_u ≤ a - η b`. The largest feasible `η` is
//! the smallest ratio `Σa / Σb` over cycles, reached by repeatedly jumping to
//! the ratio of a negative cycle.

use crate::search::GridResult;
use crate::{Ns, Problem};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use tsn_minplus::Q;

#[derive(Clone, Copy)]
struct Edge {
    u: usize,
    v: usize,
    a: Q,
    b: Q,
}

/// Bellman-Ford from `src`; `Err(cycle)` lists the edges of a negative cycle.
fn shortest(nodes: usize, edges: &[Edge], eta: Q, src: usize, reverse: bool) -> Result<Vec<Option<Q>>, Vec<usize>> {
    let mut dist: Vec<Option<Q>> = vec![None; nodes];
    let mut via: Vec<Option<usize>> = vec![None; nodes];
    dist[src] = Some(Q::zero());
    let mut last = None;
    for _ in 0..nodes {
        last = None;
        for (k, e) in edges.iter().enumerate() {
            let (u, v) = if reverse { (e.v, e.u) } else { (e.u, e.v) };
            let Some(du) = dist[u] else { continue };
            let nd = du + e.a - eta * e.b;
            if dist[v].is_none_or(|dv| nd < dv) {
                dist[v] = Some(nd);
                via[v] = Some(k);
                last = Some(v);
            }
        }
        if last.is_none() {
            return Ok(dist);
        }
    }
    let mut v = last.expect("still relaxing");
    let from = |k: usize| if reverse { edges[k].v } else { edges[k].u };
    for _ in 0..nodes {
        v = from(via[v].expect("relaxed node has a parent"));
    }
    let mut cycle = Vec::new();
    let mut x = v;
    loop {
        let k = via[x].expect("cycle node has a parent");
        cycle.push(k);
        x = from(k);
        if x == v {
            break;
        }
    }
    Err(cycle)
}

fn in_domain(domain: &[(Ns, Ns)], t: Q) -> bool {
    domain.iter().any(|&(lo, hi)| Q::from(lo) <= t && t < Q::from(hi))
}

pub(crate) fn refine(p: &Problem, grid: &GridResult) -> Option<(Vec<Q>, Q)> {
    let n = p.gates.len();
    let src = n;
    let mut edges = Vec::new();
    for (i, g) in p.gates.iter().enumerate() {
        let t = grid.starts[i];
        let &(lo, hi) = g.domain.iter().find(|&&(lo, hi)| lo <= t && t < hi)?;
        edges.push(Edge { u: src, v: i, a: Q::from(hi), b: Q::zero() });
        edges.push(Edge { u: i, v: src, a: Q::from(-lo), b: Q::zero() });
    }
    for i in 0..n {
        for j in i + 1..n {
            if grid.slots[i] != grid.slots[j] {
                continue;
            }
            let g = p.gates[i].period.gcd(&p.gates[j].period);
            let q = (grid.starts[j] - grid.starts[i]).div_euclid(g);
            edges.push(Edge { u: j, v: i, a: Q::from(-q * g), b: Q::from(p.gates[i].length) });
            edges.push(Edge { u: i, v: j, a: Q::from(g + q * g), b: Q::from(p.gates[j].length) });
        }
    }

    let mut eta = p.gates.iter().map(|g| Q::new(g.period, g.length)).fold(p.eta_cap(), Q::min);
    loop {
        match shortest(n + 1, &edges, eta, src, false) {
            Ok(_) => break,
            Err(cycle) => {
                let a: Q = cycle.iter().map(|&k| edges[k].a).sum();
                let b: Q = cycle.iter().map(|&k| edges[k].b).sum();
                if !b.is_positive() || a / b >= eta {
                    return None;
                }
                eta = a / b;
            }
        }
    }
    if eta < grid.eta {
        return None;
    }

    // smallest starts: shortest paths on the reversed constraints
    let dist = shortest(n + 1, &edges, eta, src, true).ok()?;
    let mut starts = Vec::with_capacity(n);
    for (i, g) in p.gates.iter().enumerate() {
        let mut t = -dist[i]?;
        if !in_domain(&g.domain, t) {
            t -= Q::from(g.period);
        }
        if !in_domain(&g.domain, t) {
            return None;
        }
        starts.push(t);
    }
    Some((starts, eta))
}
