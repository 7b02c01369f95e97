use crate::port::{Finished, Lane, Segment};
use crate::sync::{self, SyncPlan};
use crate::trace::{credit_detail, fmt_ns, EventKind, TraceLog, TraceRow};
use crate::{lane_of, SimError, Simulator, PREAMBLE_IFG_BYTES};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use tsn_minplus::Q;

/// One port crossed by a frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hop {
    pub port: String,
    pub queued: Q,
    pub start: Q,
    pub end: Q,
}

/// A piece of a frame sent in one go; several when the frame was preempted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub port: String,
    pub start: Q,
    pub end: Q,
    pub bits: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInstance {
    pub flow: String,
    pub seq: u64,
    /// On-wire size, preamble included when enabled.
    pub bits: Q,
    pub release: Q,
    pub hops: Vec<Hop>,
    pub fragments: Vec<Fragment>,
    /// Last-bit arrival per destination.
    pub delivered: BTreeMap<String, Q>,
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub trace: TraceLog,
    pub frames: Vec<FrameInstance>,
    pub plan: SyncPlan,
    /// Flow id -> destinations, for reporting.
    pub destinations: BTreeMap<String, Vec<String>>,
}

struct State<'a> {
    sim: &'a Simulator,
    ports: Vec<crate::port::Port>,
    frames: Vec<FrameInstance>,
    /// Flow index of every frame.
    flow_of: Vec<usize>,
    /// `(time, flow, seq, port, frame)` of last bits reaching the far end.
    arrivals: BinaryHeap<Reverse<(Q, usize, u64, usize, usize)>>,
    next_release: usize,
    /// Frames already queued at a port, so redundant copies are sent once.
    sent: BTreeSet<(usize, usize)>,
    rows: Vec<TraceRow>,
}

impl State<'_> {
    fn port_name(&self, p: usize) -> String {
        self.sim.port_ids[p].to_string()
    }

    fn row(&mut self, t: Q, kind: EventKind, node: &str, port: &str, frame: usize, detail: String) {
        let f = &self.frames[frame];
        self.rows.push(TraceRow::new(t, kind, node, port, &f.flow, Some(f.seq), detail));
    }

    /// Frame `frame` is complete at `node` at time `t`.
    fn reach(&mut self, t: Q, flow: usize, frame: usize, node: &str) {
        let spec = &self.sim.flows[flow];
        if spec.dst.iter().any(|d| d == node) && !self.frames[frame].delivered.contains_key(node) {
            self.frames[frame].delivered.insert(node.to_string(), t);
            self.row(t, EventKind::FrameArrival, node, "", frame, "delivered".into());
        }
        let outs = self.sim.forward[flow].get(node).cloned().unwrap_or_default();
        for p in outs {
            if !self.sent.insert((frame, p)) {
                continue;
            }
            let bits = self.frames[frame].bits;
            self.ports[p].enqueue(lane_of(spec.class), frame, bits);
            let port = self.port_name(p);
            self.frames[frame].hops.push(Hop { port, queued: t, start: t, end: t });
        }
    }

    fn hop_mut(&mut self, frame: usize, port: &str) -> &mut Hop {
        self.frames[frame].hops.iter_mut().find(|h| h.port == port).expect("queued before sent")
    }

    fn finish(&mut self, p: usize, t: Q) {
        let seg: Segment = self.ports[p].link.clone().expect("segment ends now");
        let fin: Finished = self.ports[p].finish(t);
        let name = self.port_name(p);
        let sent = ((t - seg.start) * self.ports[p].rate - seg.overhead).min(seg.payload);
        self.frames[fin.frame].fragments.push(Fragment { port: name.clone(), start: seg.start, end: t, bits: sent });
        let from = self.sim.port_ids[p].from.clone();
        if fin.last {
            self.hop_mut(fin.frame, &name).end = t;
            self.row(t, EventKind::TransmissionEnd, &from, &name, fin.frame, format!("lane={}", fin.lane.name()));
            let at = t + Q::from(self.sim.options.propagation);
            let f = &self.frames[fin.frame];
            let flow = self.flow_of[fin.frame];
            self.arrivals.push(Reverse((at, flow, f.seq, p, fin.frame)));
        } else {
            let left = seg.payload - sent;
            self.row(t, EventKind::PreemptHold, &from, &name, fin.frame, format!("lane={};left_bits={left}", fin.lane.name()));
        }
    }

    fn started(&mut self, p: usize, t: Q) {
        let seg = self.ports[p].link.clone().expect("just started");
        let name = self.port_name(p);
        let from = self.sim.port_ids[p].from.clone();
        let kind = if seg.resumed { EventKind::PreemptRelease } else { EventKind::TransmissionStart };
        if !seg.resumed {
            self.hop_mut(seg.frame, &name).start = t;
        }
        let detail = format!("lane={};bits={};end={}", seg.lane.name(), seg.overhead + seg.payload, fmt_ns(seg.end));
        self.row(t, kind, &from, &name, seg.frame, detail);
    }

    fn pending(&self) -> bool {
        self.next_release < self.sim.releases.len() || !self.arrivals.is_empty() || self.ports.iter().any(|p| !p.idle())
    }

    fn next_time(&self, t: Q) -> Option<Q> {
        let mut best = self.sim.releases.get(self.next_release).map(|r| r.0);
        let mut offer = |x: Q| {
            if x > t && best.is_none_or(|b| x < b) {
                best = Some(x);
            }
        };
        if let Some(Reverse(a)) = self.arrivals.peek() {
            offer(a.0);
        }
        for p in &self.ports {
            if let Some(x) = p.next_event(t) {
                offer(x);
            }
        }
        best
    }

    /// Processes everything that happens at `t`, in the order finish,
    /// arrive, start, preempt, until no segment ends at `t` any more.
    fn settle(&mut self, t: Q) {
        loop {
            for p in 0..self.ports.len() {
                if self.ports[p].ends_at(t) {
                    self.finish(p, t);
                }
            }
            while let Some(&(rt, flow, seq)) = self.sim.releases.get(self.next_release) {
                if rt > t {
                    break;
                }
                self.next_release += 1;
                let spec = &self.sim.flows[flow];
                let mut bits = Q::from(spec.size_bits());
                if self.sim.options.preamble {
                    bits += Q::from(8 * PREAMBLE_IFG_BYTES as i128);
                }
                let frame = self.frames.len();
                self.frames.push(FrameInstance {
                    flow: spec.id.clone(),
                    seq,
                    bits,
                    release: rt,
                    hops: Vec::new(),
                    fragments: Vec::new(),
                    delivered: BTreeMap::new(),
                });
                self.flow_of.push(flow);
                let src = spec.src.clone();
                self.row(rt, EventKind::FrameArrival, &src, "", frame, "release".into());
                self.reach(rt, flow, frame, &src);
            }
            while let Some(Reverse((at, flow, _, p, frame))) = self.arrivals.peek().copied() {
                if at > t {
                    break;
                }
                self.arrivals.pop();
                let node = self.sim.port_ids[p].to.clone();
                let name = self.port_name(p);
                self.row(at, EventKind::FrameArrival, &node, &name, frame, String::new());
                self.reach(at, flow, frame, &node);
            }
            let mut again = false;
            for p in 0..self.ports.len() {
                if self.ports[p].try_start(t).is_some() {
                    self.started(p, t);
                }
                self.ports[p].preempt(t);
                again |= self.ports[p].ends_at(t);
            }
            if !again {
                break;
            }
        }
    }

    fn record(&mut self, t: Q) {
        for p in 0..self.ports.len() {
            let id = &self.sim.port_ids[p];
            let (node, name) = (id.from.clone(), id.to_string());
            for lane in Lane::ALL {
                if self.ports[p].gates[lane as usize].is_change(t) {
                    let state = if self.ports[p].gates[lane as usize].open_until(t).is_some() { "open" } else { "closed" };
                    let detail = format!("lane={};state={state}", lane.name());
                    self.rows.push(TraceRow::new(t, EventKind::GateChange, &node, &name, "", None, detail));
                }
            }
            for (lane, credit, cause) in self.ports[p].record(t) {
                let detail = credit_detail(lane.name(), credit, cause);
                self.rows.push(TraceRow::new(t, EventKind::CreditEvent, &node, &name, "", None, detail));
            }
        }
    }
}

impl Simulator {
    /// Runs the data phase from the end of the synchronization prelude until
    /// every frame is delivered (or the drain time runs out), then the finish
    /// round.
    pub fn run(&self) -> Result<SimRun, SimError> {
        let mut st = State {
            sim: self,
            ports: self.ports.clone(),
            frames: Vec::new(),
            flow_of: Vec::new(),
            arrivals: BinaryHeap::new(),
            next_release: 0,
            sent: BTreeSet::new(),
            rows: Vec::new(),
        };
        let stop = Q::from(self.send_start + self.options.duration + self.options.drain);
        let mut t = Q::from(self.send_start);
        let mut last = t;
        loop {
            for p in st.ports.iter_mut() {
                p.advance(last, t);
            }
            st.settle(t);
            st.record(t);
            if !st.pending() {
                break;
            }
            match st.next_time(t) {
                Some(n) if n <= stop => {
                    last = t;
                    t = n;
                }
                _ => break,
            }
        }

        let mut plan = self.plan.clone();
        let done = t.ceil().to_integer().max(self.send_start);
        sync::finish(&self.model, &mut plan, self.options.propagation, done, self.options.budgets)?;
        let mut trace = TraceLog { rows: plan.rows.clone() };
        trace.rows.extend(st.rows);
        trace.canonicalize();
        let destinations = self.flows.iter().map(|f| (f.id.clone(), f.dst.clone())).collect();
        Ok(SimRun { trace, frames: st.frames, plan, destinations })
    }
}
