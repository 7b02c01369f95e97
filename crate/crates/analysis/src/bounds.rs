use crate::AnalysisError;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use tsn_minplus::{ceil_ns, horizontal_deviation, output_bound, Curve, Q};
use tsn_model::{flow_arrival_curve, Mode, Model, Ns, PortId, Scheduler, TrafficClass};
use tsn_servicecurves::{avb_service_curve_amplified, frame_time, tt_service_curve, ExpressLoad, SchedulerContext};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub horizon: Q,
    /// Report one maximum frame time per hop as a separate queuing term
    /// instead of leaving it inside `d^h`.
    pub strict_tqueue: bool,
    /// Index-coding ratio `r_index < 1`; TT frames shrink by it and AVB
    /// service is amplified by its inverse.
    pub shrink: Option<Q>,
    /// Feed each hop the output bound of the hops before it. When off every
    /// hop sees the flows' source curves.
    pub propagate: bool,
}

impl AnalysisOptions {
    /// Horizon from the model options, else 100 ms.
    pub fn for_model(model: &Model) -> Self {
        AnalysisOptions { horizon: Q::from(model.options.horizon.unwrap_or(100_000_000)), strict_tqueue: false, shrink: None, propagate: true }
    }
}

/// The three terms one output port adds to a flow's delay, in ns (rounded up).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopTerm {
    pub port: PortId,
    pub t_queue: Ns,
    pub d_h: Ns,
    pub l_over_c: Ns,
}

impl HopTerm {
    pub fn total(&self) -> Ns {
        self.t_queue + self.d_h + self.l_over_c
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowBound {
    pub flow: String,
    pub dst: String,
    pub class: TrafficClass,
    /// Route the bound was taken from (the worst one to `dst`).
    pub route: Vec<String>,
    pub hops: Vec<HopTerm>,
    /// Sum of the hop terms; `None` for best effort, which has no service guarantee.
    pub bound: Option<Ns>,
}

/// Arrival and service curve of one class at one port, and the delay between them.
#[derive(Debug, Clone)]
pub struct PortClass {
    pub arrival: Curve,
    pub service: Curve,
    pub delay: Q,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub scheduler: String,
    pub mode: String,
    pub shrink: Option<Q>,
    /// Sorted by flow, then destination.
    pub flows: Vec<FlowBound>,
    /// Express traffic (TT and CDT) is keyed as `TT`.
    pub ports: BTreeMap<(PortId, TrafficClass), PortClass>,
}

impl Analysis {
    pub fn bound(&self, flow: &str, dst: &str) -> Option<Ns> {
        self.flows.iter().find(|f| f.flow == flow && f.dst == dst).and_then(|f| f.bound)
    }
}

fn key(class: TrafficClass) -> Option<TrafficClass> {
    match class {
        TrafficClass::TT | TrafficClass::CDT => Some(TrafficClass::TT),
        TrafficClass::A | TrafficClass::B => Some(class),
        TrafficClass::BE => None,
    }
}

fn tag<T: ToString + Ord>(items: impl Iterator<Item = T>) -> String {
    let set: BTreeSet<String> = items.map(|x| x.to_string()).collect();
    match set.len() {
        0 => "none".into(),
        1 => set.into_iter().next().expect("one"),
        _ => "mixed".into(),
    }
}

/// Every schedule switched to `scheduler` and `mode`.
pub fn with_combo(model: &Model, scheduler: Scheduler, mode: Mode) -> Model {
    let mut m = model.clone();
    for s in m.schedules.values_mut() {
        *s = s.with(scheduler, mode);
    }
    m
}

/// Ports carrying shaped traffic, upstream before downstream.
fn port_order(model: &Model) -> Result<Vec<PortId>, AnalysisError> {
    let mut next: BTreeMap<PortId, BTreeSet<PortId>> = BTreeMap::new();
    let mut indeg: BTreeMap<PortId, usize> = BTreeMap::new();
    for f in model.flows.iter().filter(|f| key(f.class).is_some()) {
        for r in &f.routes {
            let ports: Vec<PortId> = r.windows(2).map(|w| PortId::new(&w[0], &w[1])).collect();
            for p in &ports {
                indeg.entry(p.clone()).or_insert(0);
            }
            for w in ports.windows(2) {
                if next.entry(w[0].clone()).or_default().insert(w[1].clone()) {
                    *indeg.get_mut(&w[1]).expect("seen") += 1;
                }
            }
        }
    }
    let mut ready: VecDeque<PortId> = indeg.iter().filter(|x| *x.1 == 0).map(|x| x.0.clone()).collect();
    let mut out = Vec::new();
    while let Some(p) = ready.pop_front() {
        for q in next.get(&p).into_iter().flatten() {
            let d = indeg.get_mut(q).expect("seen");
            *d -= 1;
            if *d == 0 {
                ready.push_back(q.clone());
            }
        }
        out.push(p);
    }
    if out.len() < indeg.len() {
        let stuck = indeg.into_iter().filter(|x| x.1 > 0).map(|x| x.0.to_string()).collect();
        return Err(AnalysisError::Cyclic(stuck));
    }
    Ok(out)
}

/// Per-hop bounds `d^h = h(α, β)` for every shaped class at every port,
/// summed along each flow's routes. The arrival curve of a flow at a port is
/// its source curve pushed through the delay bounds of the ports before it.
pub fn analyze(model: &Model, opts: &AnalysisOptions) -> Result<Analysis, AnalysisError> {
    let h = opts.horizon;
    let r = opts.shrink.unwrap_or_else(Q::one);
    if r <= Q::zero() || r > Q::one() {
        return Err(AnalysisError::BadShrink(r));
    }
    let order = port_order(model)?;
    let n = model.flows.len();
    // cumulative upstream delay per flow and port, worst over routes
    let mut jitter: Vec<BTreeMap<PortId, Q>> = vec![BTreeMap::new(); n];
    for (i, f) in model.flows.iter().enumerate() {
        if let Some(p) = f.ports().first() {
            jitter[i].insert(p.clone(), Q::zero());
        }
    }
    let mut ports = BTreeMap::new();
    let mut t_queue: BTreeMap<PortId, Q> = BTreeMap::new();

    for p in &order {
        let ctx_err = |class: TrafficClass| {
            let port = p.to_string();
            move |e| AnalysisError::Service { port: port.clone(), class, source: e }
        };
        if !model.schedules.contains_key(p) {
            return Err(AnalysisError::NoSchedule(p.to_string()));
        }
        let mut ctx = SchedulerContext::from_model(model, p, h).map_err(ctx_err(TrafficClass::TT))?;
        if let Some(r) = opts.shrink {
            ctx.r_index = r;
            ctx.z = 1;
        }
        let here: Vec<usize> = (0..n).filter(|&i| model.flows[i].ports().contains(p)).collect();
        let arrival = |class: TrafficClass| -> Result<Option<Curve>, AnalysisError> {
            let mut acc: Option<Curve> = None;
            for &i in here.iter().filter(|&&i| key(model.flows[i].class) == Some(class)) {
                let j = jitter[i].get(p).copied().unwrap_or_else(Q::zero);
                let a = if j.is_zero() || !opts.propagate {
                    flow_arrival_curve(&model.flows[i], h)
                } else {
                    // built past the horizon so the output bound still covers [0, h]
                    let src = flow_arrival_curve(&model.flows[i], h + j);
                    output_bound(&src, &Curve::pure_delay(j, h + j), None, None)
                        .and_then(|c| c.truncate(h))
                        .map_err(|e| AnalysisError::Service { port: p.to_string(), class, source: e.into() })?
                };
                acc = Some(match acc {
                    Some(x) => x.add(&a),
                    None => a,
                });
            }
            Ok(acc)
        };
        let mut delay: BTreeMap<TrafficClass, Q> = BTreeMap::new();
        if let Some(x) = arrival(TrafficClass::TT)? {
            let old = ctx.express.take().expect("express flows present");
            ctx.express = Some(ExpressLoad { arrival: x.clone(), ..old });
            let service = tt_service_curve(&ctx, h).map_err(ctx_err(TrafficClass::TT))?;
            let alpha = x.scale(ctx.shrink());
            let d = horizontal_deviation(&alpha, &service).map_err(|e| ctx_err(TrafficClass::TT)(e.into()))?;
            delay.insert(TrafficClass::TT, d);
            ports.insert((p.clone(), TrafficClass::TT), PortClass { arrival: alpha, service, delay: d });
        }
        for class in [TrafficClass::A, TrafficClass::B] {
            let Some(alpha) = arrival(class)? else { continue };
            let service = avb_service_curve_amplified(&ctx, class, h).map_err(ctx_err(class))?;
            let d = horizontal_deviation(&alpha, &service).map_err(|e| ctx_err(class)(e.into()))?;
            delay.insert(class, d);
            ports.insert((p.clone(), class), PortClass { arrival: alpha, service, delay: d });
        }
        let largest = model.flows_at(p).map(|f| f.size_bytes).max().unwrap_or(0);
        let tq = if opts.strict_tqueue { frame_time(largest, ctx.rate()) } else { Q::zero() };
        t_queue.insert(p.clone(), tq);

        for &i in &here {
            let f = &model.flows[i];
            let Some(d) = key(f.class).and_then(|c| delay.get(&c)) else { continue };
            // whole ns, or the denominators compound hop by hop
            let j = (jitter[i].get(p).copied().unwrap_or_else(Q::zero) + *d + tq).ceil();
            for route in &f.routes {
                for w in route.windows(3) {
                    if w[0] == p.from && w[1] == p.to {
                        let q = PortId::new(&w[1], &w[2]);
                        let e = jitter[i].entry(q).or_insert_with(Q::zero);
                        *e = (*e).max(j);
                    }
                }
            }
        }
    }

    let mut flows = Vec::new();
    for f in &model.flows {
        for dst in &f.dst {
            let mut best: Option<FlowBound> = None;
            for route in f.routes_to(dst) {
                let Some(k) = key(f.class) else {
                    best.get_or_insert(FlowBound { flow: f.id.clone(), dst: dst.clone(), class: f.class, route: route.clone(), hops: vec![], bound: None });
                    continue;
                };
                let mut hops = Vec::new();
                for w in route.windows(2) {
                    let p = PortId::new(&w[0], &w[1]);
                    let d = ports.get(&(p.clone(), k)).map(|x: &PortClass| x.delay).ok_or_else(|| AnalysisError::NoSchedule(p.to_string()))?;
                    let rate = model.port_rate(&p).expect("validated route");
                    let bits = Q::from(f.size_bits()) * if k == TrafficClass::TT { r } else { Q::one() };
                    hops.push(HopTerm { t_queue: ceil_ns(t_queue[&p]), d_h: ceil_ns(d), l_over_c: ceil_ns(bits / rate), port: p });
                }
                let bound = hops.iter().map(HopTerm::total).sum::<Ns>();
                if best.as_ref().is_none_or(|b| b.bound.is_some_and(|x| bound > x)) {
                    best = Some(FlowBound { flow: f.id.clone(), dst: dst.clone(), class: f.class, route: route.clone(), hops, bound: Some(bound) });
                }
            }
            flows.extend(best);
        }
    }
    flows.sort_by(|a, b| (&a.flow, &a.dst).cmp(&(&b.flow, &b.dst)));
    Ok(Analysis {
        scheduler: tag(model.schedules.values().map(|s| s.scheduler)),
        mode: tag(model.schedules.values().map(|s| s.mode)),
        shrink: opts.shrink,
        flows,
        ports,
    })
}
