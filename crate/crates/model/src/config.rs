//! Serialized configuration document and its validation into a [`Model`].

use crate::{
    Bridge, FlowSpec, IndexRow, IndexTable, Link, Mode, Model, ModelError, Node, NodeKind, Ns, Options, PortId,
    PortSchedule, Scheduler, TrafficClass, Window, WindowKind, MAX_FRAME, MIN_FRAME,
};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use tsn_minplus::{to_f64, Q};

const DEFAULT_IDLE_A_PCT: f64 = 60.0;
const DEFAULT_IDLE_B_PCT: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub network: NetworkDoc,
    #[serde(default)]
    pub flows: Vec<FlowDoc>,
    #[serde(default)]
    pub schedules: Vec<ScheduleDoc>,
    #[serde(default)]
    pub index_tables: Vec<IndexTableDoc>,
    #[serde(default)]
    pub options: OptionsDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub links: Vec<LinkDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bridge_library: Vec<BridgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDoc {
    pub a: String,
    pub b: String,
    pub rate_mbps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeDoc {
    pub kind: String,
    pub cost: i64,
    pub ports: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDoc {
    pub id: String,
    pub class: TrafficClass,
    pub src: String,
    pub dst: Vec<String>,
    pub size_bytes: u32,
    pub period_us: f64,
    #[serde(default = "one")]
    pub tolerance: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub route: Vec<Vec<String>>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub port: String,
    pub hyperperiod_us: f64,
    pub scheduler: Scheduler,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idle_slope_a_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idle_slope_b_pct: Option<f64>,
    #[serde(default)]
    pub windows: Vec<WindowDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDoc {
    pub kind: WindowKind,
    pub offset_us: f64,
    pub length_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexTableDoc {
    pub id: String,
    pub flows: Vec<String>,
    pub rows: Vec<IndexRowDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRowDoc {
    pub code_hex: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_us: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha_routing: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_alpha() -> f64 {
    1.0
}

impl Default for OptionsDoc {
    fn default() -> Self {
        Self { horizon_us: None, alpha_routing: 1.0, seed: 0 }
    }
}

fn us_to_ns(v: f64, what: &str) -> Result<Ns, String> {
    if !v.is_finite() || v < 0.0 {
        return Err(format!("{what} must be a finite non-negative number of microseconds, got {v}"));
    }
    Ok((v * 1000.0).round() as Ns)
}

fn ns_to_us(v: Ns) -> f64 {
    v as f64 / 1000.0
}

fn pct_to_slope(pct: f64, rate: Q) -> Q {
    Q::new((pct * 1e6).round() as i128, 100_000_000) * rate
}

fn slope_to_pct(slope: Q, rate: Q) -> f64 {
    to_f64(slope / rate * Q::from(100))
}

fn is_simple_path(path: &[String]) -> bool {
    let set: BTreeSet<&String> = path.iter().collect();
    set.len() == path.len()
}

impl Model {
    pub fn from_config(doc: ConfigDoc) -> Result<Self, ModelError> {
        let mut node_ids = BTreeSet::new();
        let mut nodes = Vec::new();
        for n in &doc.network.nodes {
            if !node_ids.insert(n.id.clone()) {
                return Err(ModelError::Duplicate { what: "node", id: n.id.clone() });
            }
            nodes.push(Node { id: n.id.clone(), kind: n.kind });
        }
        let known = |what: String, id: &str| -> Result<(), ModelError> {
            if node_ids.contains(id) {
                Ok(())
            } else {
                Err(ModelError::UnknownNode { what, id: id.to_string() })
            }
        };

        let mut links = Vec::new();
        let mut pairs = BTreeSet::new();
        for l in &doc.network.links {
            let name = format!("{}-{}", l.a, l.b);
            known(format!("link {name}"), &l.a)?;
            known(format!("link {name}"), &l.b)?;
            if l.a == l.b {
                return Err(ModelError::BadLink(name, "endpoints must be distinct".into()));
            }
            if l.rate_mbps == 0 {
                return Err(ModelError::BadLink(name, "rate must be positive".into()));
            }
            let key = if l.a < l.b { (l.a.clone(), l.b.clone()) } else { (l.b.clone(), l.a.clone()) };
            if !pairs.insert(key) {
                return Err(ModelError::Duplicate { what: "link", id: name });
            }
            links.push(Link { a: l.a.clone(), b: l.b.clone(), rate_mbps: l.rate_mbps });
        }

        let bridge_library = doc
            .network
            .bridge_library
            .iter()
            .map(|b| Bridge { kind: b.kind.clone(), cost: b.cost, ports: b.ports })
            .collect();

        let mut model = Model {
            nodes,
            links,
            bridge_library,
            flows: Vec::new(),
            schedules: BTreeMap::new(),
            index_tables: Vec::new(),
            options: Options {
                horizon: doc.options.horizon_us.map(|h| us_to_ns(h, "horizon_us")).transpose().map_err(ModelError::Parse)?,
                alpha_routing: doc.options.alpha_routing,
                seed: doc.options.seed,
            },
        };
        model.check_connected()?;

        let mut flow_ids = BTreeSet::new();
        for f in &doc.flows {
            if !flow_ids.insert(f.id.clone()) {
                return Err(ModelError::Duplicate { what: "flow", id: f.id.clone() });
            }
            let flow = model.flow_from_doc(f)?;
            model.flows.push(flow);
        }

        for s in &doc.schedules {
            let sched = model.schedule_from_doc(s)?;
            if model.schedules.contains_key(&sched.port) {
                return Err(ModelError::Duplicate { what: "schedule", id: s.port.clone() });
            }
            model.schedules.insert(sched.port.clone(), sched);
        }
        if !model.schedules.is_empty() {
            if let Some(p) = model.used_ports().into_iter().find(|p| !model.schedules.contains_key(p)) {
                return Err(ModelError::MissingSchedule(p.to_string()));
            }
        }

        let mut table_ids = BTreeSet::new();
        for t in &doc.index_tables {
            if !table_ids.insert(t.id.clone()) {
                return Err(ModelError::Duplicate { what: "index table", id: t.id.clone() });
            }
            let table = model.table_from_doc(t)?;
            model.index_tables.push(table);
        }
        Ok(model)
    }

    fn check_connected(&self) -> Result<(), ModelError> {
        let Some(first) = self.nodes.first() else { return Ok(()) };
        let mut seen = BTreeSet::from([first.id.as_str()]);
        let mut queue = VecDeque::from([first.id.as_str()]);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        match self.nodes.iter().find(|n| !seen.contains(n.id.as_str())) {
            Some(n) => Err(ModelError::Disconnected(n.id.clone())),
            None => Ok(()),
        }
    }

    fn flow_from_doc(&self, f: &FlowDoc) -> Result<FlowSpec, ModelError> {
        let bad = |reason: String| ModelError::BadFlow { flow: f.id.clone(), reason };
        let known = |id: &str| {
            self.node(id)
                .map(|_| ())
                .ok_or_else(|| ModelError::UnknownNode { what: format!("flow {}", f.id), id: id.to_string() })
        };
        known(&f.src)?;
        if f.dst.is_empty() {
            return Err(bad("no destination".into()));
        }
        for d in &f.dst {
            known(d)?;
            if *d == f.src {
                return Err(bad(format!("destination {d} equals the source")));
            }
        }
        if !(MIN_FRAME..=MAX_FRAME).contains(&f.size_bytes) {
            return Err(bad(format!("frame size {} B outside [{MIN_FRAME}, {MAX_FRAME}]", f.size_bytes)));
        }
        let period = us_to_ns(f.period_us, "period_us").map_err(bad)?;
        if period == 0 {
            return Err(ModelError::ZeroPeriod(f.id.clone()));
        }
        if f.tolerance == 0 {
            return Err(bad("tolerance must be at least 1".into()));
        }
        let mut routes = f.route.clone();
        for r in &routes {
            for n in r {
                known(n)?;
            }
            if r.first() != Some(&f.src) {
                return Err(bad(format!("route {r:?} does not start at {}", f.src)));
            }
            if !r.last().is_some_and(|l| f.dst.contains(l)) {
                return Err(bad(format!("route {r:?} does not end at a destination")));
            }
            if !is_simple_path(r) {
                return Err(bad(format!("route {r:?} revisits a node")));
            }
            if let Some(w) = r.windows(2).find(|w| self.link(&w[0], &w[1]).is_none()) {
                return Err(bad(format!("route uses missing link {}-{}", w[0], w[1])));
            }
        }
        for d in &f.dst {
            if !routes.iter().any(|r| r.last() == Some(d)) {
                let p = self.shortest_path(&f.src, d).ok_or_else(|| bad(format!("{d} unreachable")))?;
                routes.push(p);
            }
        }
        Ok(FlowSpec {
            id: f.id.clone(),
            class: f.class,
            src: f.src.clone(),
            dst: f.dst.clone(),
            size_bytes: f.size_bytes,
            period_ns: period,
            tolerance: f.tolerance,
            routes,
        })
    }

    fn schedule_from_doc(&self, s: &ScheduleDoc) -> Result<PortSchedule, ModelError> {
        let bad = |reason: String| ModelError::BadSchedule { port: s.port.clone(), reason };
        let port = PortId::parse(&s.port).ok_or_else(|| bad("port must be written `A->B`".into()))?;
        for id in [&port.from, &port.to] {
            if self.node(id).is_none() {
                return Err(ModelError::UnknownNode { what: format!("schedule {}", s.port), id: id.clone() });
            }
        }
        let rate = self.port_rate(&port).ok_or_else(|| bad("no link between the endpoints".into()))?;
        let hyperperiod = us_to_ns(s.hyperperiod_us, "hyperperiod_us").map_err(bad)?;
        if hyperperiod == 0 {
            return Err(bad("hyperperiod must be positive".into()));
        }
        let mut windows = Vec::new();
        for w in &s.windows {
            let offset = us_to_ns(w.offset_us, "offset_us").map_err(bad)?;
            let length = us_to_ns(w.length_us, "length_us").map_err(bad)?;
            if offset >= hyperperiod {
                return Err(bad(format!("{:?} window offset {offset} ns not below the hyperperiod", w.kind)));
            }
            if length == 0 || offset + length > hyperperiod {
                return Err(bad(format!("{:?} window [{offset}, {}) ns does not fit the hyperperiod", w.kind, offset + length)));
            }
            windows.push(Window { kind: w.kind, offset, length });
        }
        windows.sort_by_key(|w| (w.offset, w.kind));
        if let Some(p) = windows.windows(2).find(|p| p[1].offset < p[0].end()) {
            return Err(ModelError::WindowOverlap {
                port: s.port.clone(),
                detail: format!(
                    "{:?} [{}, {}) and {:?} [{}, {}) ns",
                    p[0].kind,
                    p[0].offset,
                    p[0].end(),
                    p[1].kind,
                    p[1].offset,
                    p[1].end()
                ),
            });
        }
        let ia = pct_to_slope(s.idle_slope_a_pct.unwrap_or(DEFAULT_IDLE_A_PCT), rate);
        let ib = pct_to_slope(s.idle_slope_b_pct.unwrap_or(DEFAULT_IDLE_B_PCT), rate);
        for (name, i) in [("A", ia), ("B", ib)] {
            if !i.is_positive() || i >= rate {
                return Err(bad(format!("idle slope {name} = {i} bits/ns must lie in (0, {rate})")));
            }
        }
        if ia + ib > rate {
            return Err(ModelError::IdleSlopeSum { port: s.port.clone(), sum: ia + ib, rate });
        }
        Ok(PortSchedule { port, hyperperiod, windows, scheduler: s.scheduler, mode: s.mode, idle_slope_a: ia, idle_slope_b: ib, rate })
    }

    fn table_from_doc(&self, t: &IndexTableDoc) -> Result<IndexTable, ModelError> {
        let bad = |reason: String| ModelError::BadIndexTable { id: t.id.clone(), reason };
        for f in &t.flows {
            let flow = self.flow(f).ok_or_else(|| bad(format!("unknown flow `{f}`")))?;
            if !flow.class.is_scheduled() {
                return Err(bad(format!("flow `{f}` is not time-triggered")));
            }
        }
        let decode = |s: &str| hex::decode(s).map_err(|e| bad(format!("bad hex `{s}`: {e}")));
        let mut rows = Vec::new();
        for r in &t.rows {
            let code = decode(&r.code_hex)?;
            let values = r.values.iter().map(|v| decode(v)).collect::<Result<Vec<_>, _>>()?;
            rows.push(IndexRow { code, values });
        }
        let table = IndexTable { id: t.id.clone(), flows: t.flows.clone(), rows };
        table.validate().map_err(bad)?;
        Ok(table)
    }

    /// Inverse of [`Model::from_config`]; defaulted routes and idle slopes are written out explicitly.
    pub fn to_config(&self) -> ConfigDoc {
        ConfigDoc {
            network: NetworkDoc {
                nodes: self.nodes.iter().map(|n| NodeDoc { id: n.id.clone(), kind: n.kind }).collect(),
                links: self.links.iter().map(|l| LinkDoc { a: l.a.clone(), b: l.b.clone(), rate_mbps: l.rate_mbps }).collect(),
                bridge_library: self
                    .bridge_library
                    .iter()
                    .map(|b| BridgeDoc { kind: b.kind.clone(), cost: b.cost, ports: b.ports })
                    .collect(),
            },
            flows: self
                .flows
                .iter()
                .map(|f| FlowDoc {
                    id: f.id.clone(),
                    class: f.class,
                    src: f.src.clone(),
                    dst: f.dst.clone(),
                    size_bytes: f.size_bytes,
                    period_us: ns_to_us(f.period_ns),
                    tolerance: f.tolerance,
                    route: f.routes.clone(),
                })
                .collect(),
            schedules: self
                .schedules
                .values()
                .map(|s| ScheduleDoc {
                    port: s.port.to_string(),
                    hyperperiod_us: ns_to_us(s.hyperperiod),
                    scheduler: s.scheduler,
                    mode: s.mode,
                    idle_slope_a_pct: Some(slope_to_pct(s.idle_slope_a, s.rate)),
                    idle_slope_b_pct: Some(slope_to_pct(s.idle_slope_b, s.rate)),
                    windows: s
                        .windows
                        .iter()
                        .map(|w| WindowDoc { kind: w.kind, offset_us: ns_to_us(w.offset), length_us: ns_to_us(w.length) })
                        .collect(),
                })
                .collect(),
            index_tables: self
                .index_tables
                .iter()
                .map(|t| IndexTableDoc {
                    id: t.id.clone(),
                    flows: t.flows.clone(),
                    rows: t
                        .rows
                        .iter()
                        .map(|r| IndexRowDoc { code_hex: hex::encode(&r.code), values: r.values.iter().map(hex::encode).collect() })
                        .collect(),
                })
                .collect(),
            options: OptionsDoc {
                horizon_us: self.options.horizon.map(ns_to_us),
                alpha_routing: self.options.alpha_routing,
                seed: self.options.seed,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn percent_conversion_round_trips() {
        let c = Q::new(1, 10);
        for pct in [60.0, 15.0, 33.333333, 0.5] {
            let s = pct_to_slope(pct, c);
            assert_eq!(pct_to_slope(slope_to_pct(s, c), c), s);
        }
        assert_eq!(pct_to_slope(60.0, c), Q::new(6, 100));
        assert!(pct_to_slope(60.0, c).is_positive() && !Q::zero().is_positive());
    }

    #[test]
    fn microsecond_conversion() {
        assert_eq!(us_to_ns(62_500.0, "p"), Ok(62_500_000));
        assert_eq!(us_to_ns(0.5, "p"), Ok(500));
        assert!(us_to_ns(-1.0, "p").is_err());
        assert!(us_to_ns(f64::NAN, "p").is_err());
    }
}
