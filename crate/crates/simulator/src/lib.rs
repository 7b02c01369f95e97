//! Deterministic discrete-event simulator of a TSN network: per-port
//! express/A/B/BE queues behind periodic gates, credit-based shaping with
//! frozen credit, optional frame preemption and the fixed-frame
//! synchronization rounds around the data phase.
//!
//! Time runs on exact rationals of a nanosecond. Frame and window bounds are
//! integer ns, but credit zero crossings generally are not.

mod engine;
pub mod gate;
mod index;
pub mod port;
mod report;
pub mod sync;
mod trace;

pub use engine::{Fragment, FrameInstance, Hop, SimRun};
pub use index::{encode_decode_indexed, shrink_duration_sum, TtFrame, WireFrame, CODE_HEADER_BYTES};
pub use report::{DelayReport, DelayRow};
pub use sync::{Budgets, FixedPayload, Phase, SyncPlan};
pub use trace::{fmt_ns, EventKind, TraceLog, TraceRow};

use gate::Gate;
use num_integer::Integer;
use port::{Lane, Port, Preemption};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use tsn_minplus::Q;
use tsn_model::{FlowSpec, Mode, Model, Ns, PortId, Scheduler, TrafficClass, WindowKind};

/// Preamble, start delimiter and inter-frame gap, in bytes.
pub const PREAMBLE_IFG_BYTES: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("duplicate flow id `{0}`")]
    DuplicateFlow(String),
    #[error("flow `{flow}` crosses {from} -> {to}, which is not a link")]
    NoLink { flow: String, from: String, to: String },
    #[error("flow `{flow}` has no route to `{dst}`")]
    NoRoute { flow: String, dst: String },
    #[error("duration {duration} ns is shorter than two hyperperiods ({hyperperiod} ns each)")]
    DurationTooShort { duration: Ns, hyperperiod: Ns },
    #[error("synchronization failed: {0}")]
    Sync(String),
    #[error("index table {0}")]
    IndexTable(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    pub seed: u64,
    /// Length of the data phase; flows release frames only inside it.
    pub duration: Ns,
    /// Add preamble and inter-frame gap to every data frame on the wire.
    pub preamble: bool,
    /// Per-link propagation delay.
    pub propagation: Ns,
    /// Draw each flow's release offset from the seeded generator; otherwise
    /// every flow releases at the start of the data phase.
    pub random_phases: bool,
    pub min_fragment_bytes: u32,
    pub overhead_bytes: u32,
    pub budgets: Budgets,
    /// How long frames may stay in flight after the last release before they
    /// count as dropped.
    pub drain: Ns,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            seed: 0,
            duration: 100_000_000,
            preamble: true,
            propagation: 0,
            random_phases: true,
            min_fragment_bytes: 64,
            overhead_bytes: 24,
            budgets: Budgets::default(),
            drain: 50_000_000,
        }
    }
}

/// Queue a flow class lands in.
pub fn lane_of(class: TrafficClass) -> Lane {
    match class {
        TrafficClass::TT | TrafficClass::CDT => Lane::Express,
        TrafficClass::A => Lane::A,
        TrafficClass::B => Lane::B,
        TrafficClass::BE => Lane::BE,
    }
}

/// Output port built from its schedule. Without one every gate stays open
/// and the shapers reserve 60 % and 15 % of the link.
pub fn build_port(model: &Model, id: &PortId, options: &SimOptions) -> Option<Port> {
    let rate = model.port_rate(id)?;
    let bits = |b: u32| Q::from(8 * b as i128);
    let preemption = Preemption { min_fragment_bits: bits(options.min_fragment_bytes), overhead_bits: bits(options.overhead_bytes) };
    let Some(s) = model.schedules.get(id) else {
        let all = [Gate::Always, Gate::Always, Gate::Always, Gate::Always];
        return Some(Port::new(rate, rate * Q::new(60, 100), rate * Q::new(15, 100), all, [false; 4], None));
    };
    let h = s.hyperperiod;
    let spans = |k: WindowKind| s.windows_of(k).map(|w| (w.offset, w.end())).collect::<Vec<_>>();
    let syn = spans(WindowKind::Syn);
    let (express, rest, overrun) = match s.scheduler {
        Scheduler::CbsTas => {
            let mut closed = spans(WindowKind::TT);
            closed.extend(&syn);
            (Gate::periodic(h, spans(WindowKind::TT)), Gate::open_except(h, &closed), true)
        }
        Scheduler::CbsSp => (Gate::open_except(h, &syn), Gate::open_except(h, &syn), false),
    };
    let gates = [express, rest.clone(), rest.clone(), rest];
    let pre = (s.mode == Mode::Preemption).then_some(preemption);
    Some(Port::new(s.rate, s.idle_slope_a, s.idle_slope_b, gates, [overrun, false, false, false], pre))
}

/// Common period of every gate schedule, or 1 µs without schedules.
pub fn hyperperiod(model: &Model) -> Ns {
    model.schedules.values().fold(None, |acc: Option<Ns>, s| Some(acc.map_or(s.hyperperiod, |a| a.lcm(&s.hyperperiod)))).unwrap_or(1000)
}

/// A ready-to-run simulation: ports, forwarding state and the release plan.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub options: SimOptions,
    pub(crate) model: Model,
    pub(crate) port_ids: Vec<PortId>,
    pub(crate) ports: Vec<Port>,
    /// Flows sorted by id.
    pub(crate) flows: Vec<FlowSpec>,
    /// Per flow: node -> output ports the flow leaves it by.
    pub(crate) forward: Vec<BTreeMap<String, Vec<usize>>>,
    /// `(time, flow, seq)` in order.
    pub(crate) releases: Vec<(Q, usize, u64)>,
    pub plan: SyncPlan,
    pub send_start: Ns,
}

impl Simulator {
    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }

    pub fn port_ids(&self) -> &[PortId] {
        &self.port_ids
    }
}

/// Checks routes, runs the synchronization rounds and lays out every frame
/// release of the data phase.
pub fn build_sim(model: &Model, options: SimOptions) -> Result<Simulator, SimError> {
    let mut seen = BTreeSet::new();
    for f in &model.flows {
        if !seen.insert(f.id.as_str()) {
            return Err(SimError::DuplicateFlow(f.id.clone()));
        }
        for d in &f.dst {
            if f.routes_to(d).next().is_none() {
                return Err(SimError::NoRoute { flow: f.id.clone(), dst: d.clone() });
            }
        }
        for r in &f.routes {
            for w in r.windows(2) {
                if model.link(&w[0], &w[1]).is_none() {
                    return Err(SimError::NoLink { flow: f.id.clone(), from: w[0].clone(), to: w[1].clone() });
                }
            }
        }
    }
    let h = hyperperiod(model);
    if options.duration < 2 * h {
        return Err(SimError::DurationTooShort { duration: options.duration, hyperperiod: h });
    }

    let mut flows = model.flows.clone();
    flows.sort_by(|a, b| a.id.cmp(&b.id));
    let port_ids: Vec<PortId> = flows.iter().flat_map(|f| f.ports()).collect::<BTreeSet<_>>().into_iter().collect();
    let ports = port_ids.iter().map(|p| build_port(model, p, &options).expect("route links checked")).collect();
    let at = |p: &PortId| port_ids.binary_search(p).expect("collected");
    let forward = flows
        .iter()
        .map(|f| {
            let mut m: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for p in f.ports() {
                let v = m.entry(p.from.clone()).or_default();
                v.push(at(&p));
                v.sort();
            }
            m
        })
        .collect();

    let plan = sync::prelude(model, options.propagation, h, options.budgets)?;
    let send_start = plan.start_of(Phase::FrameSend).expect("prelude ends in frame-send");
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut releases = Vec::new();
    for (i, f) in flows.iter().enumerate() {
        let offset = if options.random_phases { rng.gen_range(0..f.period_ns) } else { 0 };
        let mut k = 0u64;
        loop {
            let t = send_start + offset + k as Ns * f.period_ns;
            if t >= send_start + options.duration {
                break;
            }
            releases.push((Q::from(t), i, k));
            k += 1;
        }
    }
    releases.sort();
    Ok(Simulator { options, model: model.clone(), port_ids, ports, flows, forward, releases, plan, send_start })
}
