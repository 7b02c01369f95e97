//! Link-disjoint path search.

use crate::RoutingError;
use num_traits::{One, Zero};
use std::collections::BTreeSet;
use tsn_minplus::Q;

/// Undirected graph. Only transit nodes may sit inside a path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    /// Sorted by id, so index order is id order.
    nodes: Vec<String>,
    transit: Vec<bool>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(nodes: Vec<(String, bool)>, edges: &[(String, String)]) -> Result<Self, RoutingError> {
        let mut nodes = nodes;
        nodes.sort();
        nodes.dedup_by(|a, b| a.0 == b.0);
        let ids: Vec<String> = nodes.iter().map(|n| n.0.clone()).collect();
        let mut g = Graph { transit: nodes.iter().map(|n| n.1).collect(), adj: vec![Vec::new(); ids.len()], nodes: ids };
        for (a, b) in edges {
            let (i, j) = (g.index(a)?, g.index(b)?);
            if i != j && !g.adj[i].contains(&j) {
                g.adj[i].push(j);
                g.adj[j].push(i);
            }
        }
        for a in &mut g.adj {
            a.sort_unstable();
        }
        Ok(g)
    }

    pub fn index(&self, id: &str) -> Result<usize, RoutingError> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).map_err(|_| RoutingError::UnknownNode(id.into()))
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn is_transit(&self, i: usize) -> bool {
        self.transit[i]
    }

    /// Every simple src→dst path through transit nodes only, for small graphs.
    pub fn all_paths(&self, src: &str, dst: &str) -> Result<Vec<Vec<String>>, RoutingError> {
        let (s, d) = (self.index(src)?, self.index(dst)?);
        let mut out = Vec::new();
        let mut stack = vec![s];
        self.walk(d, &mut stack, &mut out);
        Ok(out)
    }

    fn walk(&self, d: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<String>>) {
        let u = *stack.last().expect("non-empty");
        if u == d {
            out.push(self.names(stack));
            return;
        }
        if stack.len() > 1 && !self.transit[u] {
            return;
        }
        for &v in &self.adj[u] {
            if !stack.contains(&v) {
                stack.push(v);
                self.walk(d, stack, out);
                stack.pop();
            }
        }
    }

    fn names(&self, p: &[usize]) -> Vec<String> {
        p.iter().map(|&i| self.nodes[i].clone()).collect()
    }
}

pub(crate) fn norm(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.into(), b.into())
    } else {
        (b.into(), a.into())
    }
}

/// Links of a path, normalized.
pub fn path_links(p: &[String]) -> impl Iterator<Item = (String, String)> + '_ {
    p.windows(2).map(|w| norm(&w[0], &w[1]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointPaths {
    pub paths: Vec<Vec<String>>,
    /// False when fewer than the requested number of paths exist.
    pub complete: bool,
}

type Label = (Q, usize, Vec<usize>);

/// Least-weight simple path; ties go to fewer hops, then the smaller node-id
/// sequence.
fn dijkstra(g: &Graph, s: usize, d: usize, mut w: impl FnMut(usize, usize) -> Option<Q>) -> Option<(Q, Vec<usize>)> {
    let n = g.nodes.len();
    let mut best: Vec<Option<Label>> = vec![None; n];
    let mut done = vec![false; n];
    best[s] = Some((Q::zero(), 0, vec![s]));
    loop {
        let u = (0..n).filter(|&i| !done[i] && best[i].is_some()).min_by(|&a, &b| best[a].cmp(&best[b]))?;
        done[u] = true;
        let (du, hu, pu) = best[u].clone().expect("reached");
        if u == d {
            return Some((du, pu));
        }
        if u != s && !g.transit[u] {
            continue;
        }
        for &v in &g.adj[u] {
            if done[v] {
                continue;
            }
            let Some(c) = w(u, v) else { continue };
            let mut pv = pu.clone();
            pv.push(v);
            let cand = (du + c, hu + 1, pv);
            if best[v].as_ref().is_none_or(|b| cand < *b) {
                best[v] = Some(cand);
            }
        }
    }
}

/// Up to `k` pairwise link-disjoint least-weight paths. Each accepted path's
/// links are removed and the arcs touching its interior nodes are multiplied
/// by `congestion` before the next search. `weight` sees the paths accepted
/// so far and returns `None` for an unusable arc. When that greedy loop stops
/// short, a unit-capacity flow search settles whether `k` paths exist at all.
pub fn k_disjoint_paths<W>(
    g: &Graph,
    src: &str,
    dst: &str,
    k: usize,
    congestion: Q,
    mut weight: W,
) -> Result<DisjointPaths, RoutingError>
where
    W: FnMut(&[Vec<String>], &str, &str) -> Option<Q>,
{
    if src == dst {
        return Err(RoutingError::SameEndpoints(src.into()));
    }
    if k == 0 {
        return Err(RoutingError::BadParameter("k must be at least 1".into()));
    }
    let (s, d) = (g.index(src)?, g.index(dst)?);
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut heat = vec![0i32; g.nodes.len()];
    let mut paths: Vec<Vec<String>> = Vec::new();
    while paths.len() < k {
        let found = dijkstra(g, s, d, |u, v| {
            if used.contains(&(u.min(v), u.max(v))) {
                return None;
            }
            let base = weight(&paths, &g.nodes[u], &g.nodes[v])?;
            Some(base * pow(congestion, heat[u] + heat[v]))
        });
        let Some((_, p)) = found else { break };
        for w in p.windows(2) {
            used.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
        for &x in &p[1..p.len() - 1] {
            heat[x] += 1;
        }
        paths.push(g.names(&p));
    }
    if paths.len() < k {
        let flow = flow_paths(g, s, d, k, |u, v| weight(&[], &g.nodes[u], &g.nodes[v]));
        if flow.len() > paths.len() {
            paths = flow.iter().map(|p| g.names(p)).collect();
        }
    }
    Ok(DisjointPaths { complete: paths.len() == k, paths })
}

fn pow(x: Q, e: i32) -> Q {
    (0..e).fold(Q::one(), |acc, _| acc * x)
}

/// Augmenting-path max flow with unit capacity per link. Only decides how
/// many disjoint paths exist; their weights are not minimized.
fn flow_paths(g: &Graph, s: usize, d: usize, k: usize, mut w: impl FnMut(usize, usize) -> Option<Q>) -> Vec<Vec<usize>> {
    let n = g.nodes.len();
    let usable = |x: usize| x == s || x == d || g.transit[x];
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    for u in 0..n {
        for &v in &g.adj[u] {
            if usable(u) && usable(v) && v != s && u != d && w(u, v).is_some() {
                arcs.push((u, v));
            }
        }
    }
    let mut flow = vec![false; arcs.len()];
    for _ in 0..k {
        // breadth-first over the residual graph: free arcs forward, used ones backward
        let mut via: Vec<Option<(usize, bool)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for (a, &(u, v)) in arcs.iter().enumerate() {
                let (from, to) = if flow[a] { (v, u) } else { (u, v) };
                if from == x && !seen[to] {
                    seen[to] = true;
                    via[to] = Some((a, flow[a]));
                    queue.push_back(to);
                }
            }
        }
        if !seen[d] {
            break;
        }
        let mut y = d;
        while y != s {
            let (a, back) = via[y].expect("on the augmenting path");
            flow[a] = !back;
            y = if back { arcs[a].1 } else { arcs[a].0 };
        }
        // a link carried both ways cancels out
        for a in 0..arcs.len() {
            if flow[a] {
                if let Some(b) = arcs.iter().position(|&(u, v)| u == arcs[a].1 && v == arcs[a].0) {
                    if flow[b] {
                        flow[a] = false;
                        flow[b] = false;
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    loop {
        let mut walk = vec![s];
        let mut u = s;
        while u != d {
            let Some(a) = (0..arcs.len()).find(|&a| flow[a] && arcs[a].0 == u) else { break };
            flow[a] = false;
            u = arcs[a].1;
            if let Some(pos) = walk.iter().position(|&x| x == u) {
                walk.truncate(pos + 1);
            } else {
                walk.push(u);
            }
        }
        if u != d {
            break;
        }
        out.push(walk);
    }
    out.sort_by_key(|p| (p.len(), p.clone()));
    out.truncate(k);
    out
}
