//! Network, flow and gate-schedule model.
//!
//! Times are integer nanoseconds, link rates are exact bits/ns and frame
//! sizes are on-wire bytes. A [`Model`] is only ever produced by
//! [`Model::from_config`], which resolves every cross-reference, so the rest
//! of the workspace can index into it without re-checking.

mod arrival;
mod config;
mod index;

pub use arrival::{class_aggregate, flow_arrival_curve};
pub use config::{
    BridgeDoc, ConfigDoc, FlowDoc, IndexRowDoc, IndexTableDoc, LinkDoc, NetworkDoc, NodeDoc, OptionsDoc, ScheduleDoc, WindowDoc,
};
pub use index::{IndexRow, IndexTable};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use tsn_minplus::Q;

pub type Ns = i128;

pub const MIN_FRAME: u32 = 64;
pub const MAX_FRAME: u32 = 1518;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown node `{id}` referenced by {what}")]
    UnknownNode { what: String, id: String },
    #[error("duplicate {what} id `{id}`")]
    Duplicate { what: &'static str, id: String },
    #[error("link {0}: {1}")]
    BadLink(String, String),
    #[error("network is not connected: `{0}` unreachable")]
    Disconnected(String),
    #[error("flow `{flow}`: {reason}")]
    BadFlow { flow: String, reason: String },
    #[error("flow `{0}` has period 0")]
    ZeroPeriod(String),
    #[error("port {port}: windows overlap ({detail})")]
    WindowOverlap { port: String, detail: String },
    #[error("port {port}: {reason}")]
    BadSchedule { port: String, reason: String },
    #[error("port {port}: idle slopes sum to {sum} bits/ns, exceeding link rate {rate}")]
    IdleSlopeSum { port: String, sum: Q, rate: Q },
    #[error("port {0} is used by a route but has no schedule")]
    MissingSchedule(String),
    #[error("index table `{id}`: {reason}")]
    BadIndexTable { id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    EndSystem,
    Switch,
    Clock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

/// Full-duplex link; each direction is an independent output port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub a: String,
    pub b: String,
    pub rate_mbps: u64,
}

impl Link {
    /// Rate in bits/ns.
    pub fn rate(&self) -> Q {
        Q::new(self.rate_mbps as i128, 1000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bridge {
    pub kind: String,
    pub cost: i64,
    pub ports: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrafficClass {
    TT,
    CDT,
    A,
    B,
    BE,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 5] = [Self::TT, Self::CDT, Self::A, Self::B, Self::BE];

    /// 802.1Q priority code point, from the 8-queue column of the PCP table.
    pub fn pcp(self) -> u8 {
        match self {
            Self::TT | Self::CDT => 7,
            Self::A => 3,
            Self::B => 2,
            Self::BE => 0,
        }
    }

    pub fn is_scheduled(self) -> bool {
        matches!(self, Self::TT | Self::CDT)
    }

    pub fn is_avb(self) -> bool {
        matches!(self, Self::A | Self::B)
    }
}

impl fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSpec {
    pub id: String,
    pub class: TrafficClass,
    pub src: String,
    pub dst: Vec<String>,
    pub size_bytes: u32,
    pub period_ns: Ns,
    /// Required number of link-disjoint routes.
    pub tolerance: u32,
    /// Node-id paths from `src`, at least one per destination.
    pub routes: Vec<Vec<String>>,
}

impl FlowSpec {
    pub fn size_bits(&self) -> i128 {
        self.size_bytes as i128 * 8
    }

    /// Every directed port `a->b` crossed by any of the flow's routes, deduplicated,
    /// in first-use order.
    pub fn ports(&self) -> Vec<PortId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.routes {
            for w in r.windows(2) {
                let p = PortId::new(&w[0], &w[1]);
                if seen.insert(p.clone()) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Routes reaching `dst`.
    pub fn routes_to<'a>(&'a self, dst: &'a str) -> impl Iterator<Item = &'a Vec<String>> + 'a {
        self.routes.iter().filter(move |r| r.last().map(String::as_str) == Some(dst))
    }
}

/// Directed output port, written `A->B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortId {
    pub from: String,
    pub to: String,
}

impl PortId {
    pub fn new(from: &str, to: &str) -> Self {
        Self { from: from.to_string(), to: to.to_string() }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (a, b) = s.split_once("->")?;
        let (a, b) = (a.trim(), b.trim());
        (!a.is_empty() && !b.is_empty()).then(|| Self::new(a, b))
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WindowKind {
    TT,
    AVB,
    #[serde(rename = "syn")]
    Syn,
    #[serde(rename = "guard-band")]
    GuardBand,
    #[serde(rename = "overhead")]
    Overhead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub kind: WindowKind,
    pub offset: Ns,
    pub length: Ns,
}

impl Window {
    pub fn end(&self) -> Ns {
        self.offset + self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheduler {
    #[serde(rename = "CBS+TAS")]
    CbsTas,
    #[serde(rename = "CBS+SP")]
    CbsSp,
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CbsTas => "CBS+TAS",
            Self::CbsSp => "CBS+SP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    NonPreemption,
    Preemption,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NonPreemption => "non-preemption",
            Self::Preemption => "preemption",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortSchedule {
    pub port: PortId,
    pub hyperperiod: Ns,
    /// Sorted by offset, non-overlapping.
    pub windows: Vec<Window>,
    pub scheduler: Scheduler,
    pub mode: Mode,
    pub idle_slope_a: Q,
    pub idle_slope_b: Q,
    /// Link rate of the port, copied from the link.
    pub rate: Q,
}

impl PortSchedule {
    pub fn idle_slope(&self, class: TrafficClass) -> Option<Q> {
        match class {
            TrafficClass::A => Some(self.idle_slope_a),
            TrafficClass::B => Some(self.idle_slope_b),
            _ => None,
        }
    }

    /// `S = I - C`, always negative after validation.
    pub fn send_slope(&self, class: TrafficClass) -> Option<Q> {
        self.idle_slope(class).map(|i| i - self.rate)
    }

    pub fn windows_of(&self, kind: WindowKind) -> impl Iterator<Item = &Window> + '_ {
        self.windows.iter().filter(move |w| w.kind == kind)
    }

    pub fn total_length(&self, kind: WindowKind) -> Ns {
        self.windows_of(kind).map(|w| w.length).sum()
    }

    /// Same port with a different scheduler and integration mode.
    pub fn with(&self, scheduler: Scheduler, mode: Mode) -> Self {
        Self { scheduler, mode, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub horizon: Option<Ns>,
    pub alpha_routing: f64,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self { horizon: None, alpha_routing: 1.0, seed: 0 }
    }
}

/// Fully validated model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub bridge_library: Vec<Bridge>,
    pub flows: Vec<FlowSpec>,
    pub schedules: BTreeMap<PortId, PortSchedule>,
    pub index_tables: Vec<IndexTable>,
    pub options: Options,
}

impl Model {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn link(&self, a: &str, b: &str) -> Option<&Link> {
        self.links.iter().find(|l| (l.a == a && l.b == b) || (l.a == b && l.b == a))
    }

    pub fn flow(&self, id: &str) -> Option<&FlowSpec> {
        self.flows.iter().find(|f| f.id == id)
    }

    pub fn port_rate(&self, port: &PortId) -> Option<Q> {
        self.link(&port.from, &port.to).map(Link::rate)
    }

    /// All directed ports crossed by at least one flow, sorted.
    pub fn used_ports(&self) -> BTreeSet<PortId> {
        self.flows.iter().flat_map(|f| f.ports()).collect()
    }

    /// Flows whose routes cross `port`, in model order.
    pub fn flows_at<'a>(&'a self, port: &'a PortId) -> impl Iterator<Item = &'a FlowSpec> + 'a {
        self.flows.iter().filter(move |f| f.ports().contains(port))
    }

    pub fn neighbors(&self, id: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .links
            .iter()
            .filter_map(|l| {
                if l.a == id {
                    Some(l.b.as_str())
                } else if l.b == id {
                    Some(l.a.as_str())
                } else {
                    None
                }
            })
            .collect();
        out.sort();
        out
    }

    /// Fewest-hop path with lexicographic tie-break on node ids.
    pub fn shortest_path(&self, src: &str, dst: &str) -> Option<Vec<String>> {
        let mut prev: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue = VecDeque::from([src]);
        let mut seen = BTreeSet::from([src]);
        while let Some(u) = queue.pop_front() {
            if u == dst {
                let mut path = vec![dst.to_string()];
                let mut cur = dst;
                while let Some(&p) = prev.get(cur) {
                    path.push(p.to_string());
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for v in self.neighbors(u) {
                if seen.insert(v) {
                    prev.insert(v, u);
                    queue.push_back(v);
                }
            }
        }
        None
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ConfigDoc = serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        Self::from_config(doc)
    }

    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let doc: ConfigDoc = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        Self::from_config(doc)
    }

    /// Picks the format from the extension (`.toml`, anything else is JSON).
    pub fn load(path: &std::path::Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Parse(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_config()).expect("config serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_config()).expect("config serializes")
    }
}
