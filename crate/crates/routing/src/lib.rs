//! Topology synthesis and routing for messages that must survive link
//! failures.
//!
//! The candidate topology joins every pair of up to `K` bridges and every
//! ECU to every bridge. Synthesis labels each candidate bridge with a library
//! kind or drops it, keeps only the links some route uses, and scores the
//! result as monetary cost plus `α` times total hops, made infinite when a
//! port's traffic cannot be gated without overlap.

mod cost;
mod fault;
mod paths;
mod synth;

pub use cost::{cost, overlap_free, Cost, CostBreakdown};
pub use fault::{fault_sweep, inject_fault_and_reroute, DeliveryFailure, FaultOutcome};
pub use paths::{k_disjoint_paths, path_links, DisjointPaths, Graph};
pub use synth::{nlr_baseline, synthesize_topology};

use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use tsn_minplus::Q;
use tsn_model::{Bridge, ConfigDoc, FlowDoc, LinkDoc, Model, NetworkDoc, NodeDoc, NodeKind, OptionsDoc};

pub use tsn_model::FlowSpec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoutingError {
    #[error("source and destination are both `{0}`")]
    SameEndpoints(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("{0}")]
    BadParameter(String),
    #[error("message `{message}` to `{destination}` needs {needed} disjoint routes, the candidate graph has {found}")]
    Infeasible { message: String, destination: String, needed: usize, found: usize },
    #[error("bridge `{0}` needs more ports than any allowed library kind has")]
    PortsExceeded(String),
    #[error("`{0}` is not part of the solution")]
    NotRetained(String),
}

/// A decision element: a bridge or an undirected link (endpoints sorted).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Bridge(String),
    Link(String, String),
}

impl Element {
    pub fn link(a: &str, b: &str) -> Self {
        let (a, b) = paths::norm(a, b);
        Element::Link(a, b)
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Element::Bridge(b) => write!(f, "{b}"),
            Element::Link(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

/// Candidate bridge and the library kinds it may be labeled with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub id: String,
    /// Empty means any kind in the library.
    pub kinds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingProblem {
    pub ecus: Vec<String>,
    pub bridges: Vec<Candidate>,
    pub library: Vec<Bridge>,
    /// Monetary cost of one retained link.
    pub link_cost: Q,
    pub rate_mbps: u64,
    pub messages: Vec<FlowSpec>,
    /// Weight of total hops against monetary cost.
    pub alpha: Q,
    /// Weight multiplier on arcs next to an accepted path's interior nodes.
    pub congestion: Q,
}

impl RoutingProblem {
    /// `k` interchangeable candidate bridges `B1..Bk`, unit link cost,
    /// 100 Mbit/s, `α = 1`, congestion 1.5.
    pub fn new(ecus: Vec<String>, k: usize, library: Vec<Bridge>, messages: Vec<FlowSpec>) -> Self {
        RoutingProblem {
            ecus,
            bridges: (1..=k).map(|i| Candidate { id: format!("B{i}"), kinds: Vec::new() }).collect(),
            library,
            link_cost: Q::from(1),
            rate_mbps: 100,
            messages,
            alpha: Q::from(1),
            congestion: Q::new(3, 2),
        }
    }

    /// End systems and flows of `model`, its bridge library and `α`, with
    /// `k` fresh candidate bridges.
    pub fn from_model(model: &Model, k: usize) -> Self {
        let ecus = model.nodes.iter().filter(|n| n.kind == NodeKind::EndSystem).map(|n| n.id.clone()).collect();
        let mut p = Self::new(ecus, k, model.bridge_library.clone(), model.flows.clone());
        p.alpha = Q::new((model.options.alpha_routing * 1e6).round() as i128, 1_000_000);
        if let Some(l) = model.links.first() {
            p.rate_mbps = l.rate_mbps;
        }
        p
    }

    pub(crate) fn validate(&self) -> Result<(), RoutingError> {
        if self.bridges.is_empty() {
            return Err(RoutingError::BadParameter("no candidate bridges".into()));
        }
        if self.library.is_empty() {
            return Err(RoutingError::BadParameter("empty bridge library".into()));
        }
        if self.alpha < Q::zero() || self.link_cost < Q::zero() || self.congestion < Q::from(1) {
            return Err(RoutingError::BadParameter("α and link cost must be ≥ 0, congestion ≥ 1".into()));
        }
        if self.rate_mbps == 0 {
            return Err(RoutingError::BadParameter("link rate must be positive".into()));
        }
        for c in &self.bridges {
            if self.ecus.contains(&c.id) {
                return Err(RoutingError::BadParameter(format!("`{}` is both an ECU and a bridge", c.id)));
            }
            if let Some(k) = c.kinds.iter().find(|k| !self.library.iter().any(|b| &b.kind == *k)) {
                return Err(RoutingError::BadParameter(format!("bridge `{}`: unknown kind `{k}`", c.id)));
            }
        }
        Ok(())
    }

    pub(crate) fn allowed(&self, bridge: &str) -> Vec<&Bridge> {
        let c = self.bridges.iter().find(|c| c.id == bridge);
        self.library.iter().filter(|b| c.is_none_or(|c| c.kinds.is_empty() || c.kinds.contains(&b.kind))).collect()
    }

    pub(crate) fn max_ports(&self, bridge: &str) -> u32 {
        self.allowed(bridge).iter().map(|b| b.ports).max().unwrap_or(0)
    }

    /// Cheapest allowed kind with at least `degree` ports, ties by kind name.
    pub(crate) fn label(&self, bridge: &str, degree: usize) -> Option<&Bridge> {
        self.allowed(bridge)
            .into_iter()
            .filter(|b| b.ports as usize >= degree)
            .min_by(|x, y| (x.cost, &x.kind).cmp(&(y.cost, &y.kind)))
    }

    /// ECUs, candidate bridges, and every bridge–bridge and ECU–bridge link.
    pub fn candidate_graph(&self) -> Graph {
        let mut nodes: Vec<(String, bool)> = self.ecus.iter().map(|e| (e.clone(), false)).collect();
        nodes.extend(self.bridges.iter().map(|b| (b.id.clone(), true)));
        let mut edges = Vec::new();
        for (i, b) in self.bridges.iter().enumerate() {
            for c in &self.bridges[i + 1..] {
                edges.push((b.id.clone(), c.id.clone()));
            }
            for e in &self.ecus {
                edges.push((e.clone(), b.id.clone()));
            }
        }
        Graph::new(nodes, &edges).expect("edges use known nodes")
    }

    /// Decision elements `D`: candidate bridges, then the `K(K-1)/2`
    /// bridge–bridge links, then the ECU attachments.
    pub fn decision_elements(&self) -> Vec<Element> {
        let mut out: Vec<Element> = self.bridges.iter().map(|b| Element::Bridge(b.id.clone())).collect();
        for (i, b) in self.bridges.iter().enumerate() {
            for c in &self.bridges[i + 1..] {
                out.push(Element::link(&b.id, &c.id));
            }
        }
        for b in &self.bridges {
            for e in &self.ecus {
                out.push(Element::link(e, &b.id));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingSolution {
    /// Retained bridges and their library kind.
    pub bridges: BTreeMap<String, String>,
    pub links: BTreeSet<(String, String)>,
    /// Routes per message id, in destination order.
    pub routes: BTreeMap<String, Vec<Vec<String>>>,
    pub cost: CostBreakdown,
    /// Failed elements; they stay paid for but carry nothing.
    pub inactive: BTreeSet<Element>,
    pub failures: Vec<DeliveryFailure>,
}

impl RoutingSolution {
    pub fn schedulable(&self) -> bool {
        self.cost.c_overlap == Cost::Finite(Q::zero())
    }

    pub fn retains(&self, e: &Element) -> bool {
        match e {
            Element::Bridge(b) => self.bridges.contains_key(b),
            Element::Link(a, b) => self.links.contains(&(a.clone(), b.clone())),
        }
    }

    pub fn degree(&self, node: &str) -> usize {
        self.links.iter().filter(|(a, b)| a == node || b == node).count()
    }

    /// Labeling vector over `problem`'s decision elements; `None` marks a
    /// discarded element.
    pub fn labeling(&self, problem: &RoutingProblem) -> Vec<(Element, Option<String>)> {
        problem
            .decision_elements()
            .into_iter()
            .map(|e| {
                let label = match &e {
                    Element::Bridge(b) => self.bridges.get(b).cloned(),
                    Element::Link(..) => self.retains(&e).then(|| "link".to_string()),
                };
                (e, label)
            })
            .collect()
    }

    /// The synthesized network as a config: ECUs, retained bridges as
    /// switches, retained links, and messages with their routes.
    pub fn to_config(&self, problem: &RoutingProblem) -> ConfigDoc {
        let mut nodes: Vec<NodeDoc> = problem.ecus.iter().map(|e| NodeDoc { id: e.clone(), kind: NodeKind::EndSystem }).collect();
        nodes.extend(self.bridges.keys().map(|b| NodeDoc { id: b.clone(), kind: NodeKind::Switch }));
        ConfigDoc {
            network: NetworkDoc {
                nodes,
                links: self
                    .links
                    .iter()
                    .map(|(a, b)| LinkDoc { a: a.clone(), b: b.clone(), rate_mbps: problem.rate_mbps })
                    .collect(),
                bridge_library: problem
                    .library
                    .iter()
                    .map(|b| tsn_model::BridgeDoc { kind: b.kind.clone(), cost: b.cost, ports: b.ports })
                    .collect(),
            },
            flows: problem
                .messages
                .iter()
                .filter_map(|m| {
                    let routes = self.routes.get(&m.id)?;
                    Some(FlowDoc {
                        id: m.id.clone(),
                        class: m.class,
                        src: m.src.clone(),
                        dst: m.dst.clone(),
                        size_bytes: m.size_bytes,
                        period_us: m.period_ns as f64 / 1000.0,
                        tolerance: m.tolerance,
                        route: routes.clone(),
                    })
                })
                .collect(),
            schedules: Vec::new(),
            index_tables: Vec::new(),
            options: OptionsDoc::default(),
        }
    }
}
