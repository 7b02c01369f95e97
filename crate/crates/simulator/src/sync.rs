//! Fixed-frame synchronization: the phases every node runs through before
//! data may be sent, and the finish round after it.

use crate::trace::{EventKind, TraceRow};
use crate::SimError;
use std::collections::{BTreeMap, VecDeque};
use tsn_minplus::Q;
use tsn_model::{Model, NodeKind, Ns, TrafficClass};

pub const FIXED_FRAME_BYTES: u32 = 70;
pub const ACK_BYTES: u32 = 64;
pub const FINISH_BYTES: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Initial,
    FixedFramePropagation,
    Ack,
    Buffer,
    FrameSend,
    Finish,
}

impl Phase {
    pub const ORDER: [Phase; 6] =
        [Phase::Initial, Phase::FixedFramePropagation, Phase::Ack, Phase::Buffer, Phase::FrameSend, Phase::Finish];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::FixedFramePropagation => "fixed-frame-propagation",
            Phase::Ack => "ack",
            Phase::Buffer => "buffer",
            Phase::FrameSend => "frame-send",
            Phase::Finish => "finish",
        }
    }
}

/// Longest allowed time per phase, in ns. The frame-send phase has none.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    pub initial: Ns,
    pub propagation: Ns,
    pub ack: Ns,
    pub buffer: Ns,
    pub finish: Ns,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { initial: 200_000, propagation: 500_000, ack: 1_000_000, buffer: 250_000, finish: 200_000 }
    }
}

/// 32 B payload of the fixed frame: idle slope and send slope of class A in
/// bit/s, largest frame in bytes and the dominant traffic class, 8 B each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPayload {
    pub idle_slope: u64,
    pub send_slope: u64,
    pub frame_length: u64,
    pub traffic_type: u64,
}

impl FixedPayload {
    pub fn encode(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (k, v) in [self.idle_slope, self.send_slope, self.frame_length, self.traffic_type].into_iter().enumerate() {
            out[8 * k..8 * k + 8].copy_from_slice(&v.to_be_bytes());
        }
        out
    }

    pub fn decode(b: &[u8; 32]) -> Self {
        let w = |k: usize| u64::from_be_bytes(b[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        FixedPayload { idle_slope: w(0), send_slope: w(1), frame_length: w(2), traffic_type: w(3) }
    }
}

/// Phase start times and the control traffic that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncPlan {
    pub master: String,
    pub phases: Vec<(Phase, Ns)>,
    pub rows: Vec<TraceRow>,
    /// Receipt time of the fixed frame per node.
    pub timers: BTreeMap<String, Ns>,
}

impl SyncPlan {
    pub fn start_of(&self, p: Phase) -> Option<Ns> {
        self.phases.iter().find(|x| x.0 == p).map(|x| x.1)
    }
}

struct Tree {
    master: String,
    parent: BTreeMap<String, String>,
    order: Vec<String>,
}

fn tree(model: &Model) -> Result<Tree, SimError> {
    let mut ids: Vec<&tsn_model::Node> = model.nodes.iter().collect();
    ids.sort_by(|a, b| a.id.cmp(&b.id));
    let master = ids
        .iter()
        .find(|n| n.kind == NodeKind::Clock && !model.neighbors(&n.id).is_empty())
        .or_else(|| ids.iter().find(|n| n.kind == NodeKind::Switch))
        .or_else(|| ids.first())
        .ok_or(SimError::Sync("empty network".into()))?
        .id
        .clone();
    let mut parent = BTreeMap::new();
    let mut order = vec![master.clone()];
    let mut queue = VecDeque::from([master.clone()]);
    while let Some(u) = queue.pop_front() {
        for v in model.neighbors(&u) {
            if v != master && !parent.contains_key(v) {
                parent.insert(v.to_string(), u.clone());
                order.push(v.to_string());
                queue.push_back(v.to_string());
            }
        }
    }
    Ok(Tree { master, parent, order })
}

fn tx_time(model: &Model, a: &str, b: &str, bytes: u32) -> Ns {
    let mbps = model.link(a, b).map_or(100, |l| l.rate_mbps) as i128;
    (bytes as i128 * 8 * 1000 + mbps - 1) / mbps
}

fn payload_for(model: &Model, from: &str, to: &str) -> FixedPayload {
    let port = tsn_model::PortId::new(from, to);
    let rate = model.port_rate(&port).unwrap_or(Q::new(1, 10));
    let (idle, send) = match model.schedules.get(&port) {
        Some(s) => (s.idle_slope_a, s.rate - s.idle_slope_a),
        None => (rate * Q::new(60, 100), rate * Q::new(40, 100)),
    };
    let flows: Vec<_> = model.flows_at(&port).collect();
    let frame = flows.iter().map(|f| f.size_bytes).max().unwrap_or(0);
    let class = flows.iter().map(|f| f.class).min().unwrap_or(TrafficClass::BE);
    let bps = |x: Q| (x * Q::from(1_000_000_000)).round().to_integer() as u64;
    FixedPayload { idle_slope: bps(idle), send_slope: bps(send), frame_length: frame as u64, traffic_type: class.pcp() as u64 }
}

struct Wire<'a> {
    model: &'a Model,
    prop: Ns,
    busy: BTreeMap<(String, String), Ns>,
    rows: Vec<TraceRow>,
}

impl Wire<'_> {
    /// Sends a control frame at or after `at`; returns its receipt time.
    fn send(&mut self, at: Ns, from: &str, to: &str, bytes: u32, what: &str, detail: String) -> Ns {
        let key = (from.to_string(), to.to_string());
        let start = at.max(*self.busy.get(&key).unwrap_or(&0));
        let end = start + tx_time(self.model, from, to, bytes);
        self.busy.insert(key, end);
        let port = format!("{from}->{to}");
        self.rows.push(TraceRow::new(Q::from(start), EventKind::TransmissionStart, from, &port, what, None, detail.clone()));
        self.rows.push(TraceRow::new(Q::from(end), EventKind::TransmissionEnd, from, &port, what, None, detail));
        end + self.prop
    }
}

fn phase_row(t: Ns, p: Phase, node: &str) -> TraceRow {
    TraceRow::new(Q::from(t), EventKind::SyncPhaseChange, node, "", "", None, p.name().into())
}

/// Runs the phases up to frame-send. Data may start at the first multiple of
/// `align` after the buffer phase.
pub fn prelude(model: &Model, prop: Ns, align: Ns, budgets: Budgets) -> Result<SyncPlan, SimError> {
    let tr = tree(model)?;
    let mut wire = Wire { model, prop, busy: BTreeMap::new(), rows: Vec::new() };
    let m = tr.master.clone();
    let mut phases = vec![(Phase::Initial, 0)];
    wire.rows.push(phase_row(0, Phase::Initial, &m));

    // initial state: the master's neighbours must hear a fixed frame in time
    let mut heard = false;
    for v in model.neighbors(&m) {
        let p = payload_for(model, &m, v);
        let at = wire.send(0, &m, v, FIXED_FRAME_BYTES, "sync-fixed", hex::encode(p.encode()));
        heard |= at <= budgets.initial;
    }
    if !heard && model.nodes.len() > 1 {
        return Err(SimError::Sync(format!("no fixed frame from `{m}` within the initial slot")));
    }

    let t1 = budgets.initial;
    phases.push((Phase::FixedFramePropagation, t1));
    wire.rows.push(phase_row(t1, Phase::FixedFramePropagation, &m));
    let mut timers = BTreeMap::from([(m.clone(), t1)]);
    for u in &tr.order {
        let got = timers[u];
        let children: Vec<&String> = tr.order.iter().filter(|v| tr.parent.get(*v) == Some(u)).collect();
        for v in children {
            let p = payload_for(model, u, v);
            let bytes = p.encode();
            let at = wire.send(got, u, v, FIXED_FRAME_BYTES, "sync-fixed", hex::encode(bytes));
            // the receiver reads the layout back
            if FixedPayload::decode(&bytes) != p {
                return Err(SimError::Sync(format!("fixed frame to `{v}` corrupted")));
            }
            timers.insert(v.clone(), at);
        }
    }
    let t2 = *timers.values().max().expect("master present");
    if t2 - t1 >= budgets.propagation {
        return Err(SimError::Sync(format!("fixed-frame propagation took {} ns", t2 - t1)));
    }

    phases.push((Phase::Ack, t2));
    wire.rows.push(phase_row(t2, Phase::Ack, &m));
    // every node acknowledges to the master, relayed up the tree, deepest first
    let mut arrive: BTreeMap<String, Vec<Ns>> = BTreeMap::new();
    let mut t3 = t2;
    for v in tr.order.iter().rev() {
        let Some(up) = tr.parent.get(v) else { continue };
        let mut acks = arrive.remove(v).unwrap_or_default();
        acks.insert(0, t2);
        for a in acks {
            let at = wire.send(a, v, up, ACK_BYTES, "sync-ack", format!("from {v}"));
            arrive.entry(up.clone()).or_default().push(at);
            t3 = t3.max(at);
        }
    }
    if t3 - t2 >= budgets.ack {
        return Err(SimError::Sync(format!("acknowledgements took {} ns", t3 - t2)));
    }

    phases.push((Phase::Buffer, t3));
    wire.rows.push(phase_row(t3, Phase::Buffer, &m));
    // the buffer slot is only used when propagation outlasted the acknowledgements
    let t4 = if t2 - t1 > t3 - t2 { t3 + budgets.buffer } else { t3 };
    let t5 = (t4 + align - 1).div_euclid(align) * align;
    phases.push((Phase::FrameSend, t5));
    wire.rows.push(phase_row(t5, Phase::FrameSend, &m));
    Ok(SyncPlan { master: m, phases, rows: wire.rows, timers })
}

/// Finish round after the last data frame: every end system reports to the
/// master over the tree.
pub fn finish(model: &Model, plan: &mut SyncPlan, prop: Ns, at: Ns, budgets: Budgets) -> Result<Ns, SimError> {
    let tr = tree(model)?;
    let mut wire = Wire { model, prop, busy: BTreeMap::new(), rows: Vec::new() };
    plan.phases.push((Phase::Finish, at));
    wire.rows.push(phase_row(at, Phase::Finish, &tr.master));
    let mut arrive: BTreeMap<String, Vec<Ns>> = BTreeMap::new();
    let mut done = at;
    for v in tr.order.iter().rev() {
        let Some(up) = tr.parent.get(v) else { continue };
        let mut msgs = arrive.remove(v).unwrap_or_default();
        if model.node(v).is_some_and(|n| n.kind == NodeKind::EndSystem) {
            msgs.insert(0, at);
        }
        for a in msgs {
            let t = wire.send(a, v, up, FINISH_BYTES, "sync-finish", format!("via {v}"));
            arrive.entry(up.clone()).or_default().push(t);
            done = done.max(t);
        }
    }
    plan.rows.extend(wire.rows);
    if done - at >= budgets.finish {
        return Err(SimError::Sync(format!("finish round took {} ns", done - at)));
    }
    Ok(done)
}
