use crate::{analyze, with_combo, Analysis, AnalysisError, AnalysisOptions, Combo};
use std::collections::BTreeMap;
use tsn_gclsynth::{synthesize, verify_schedule, GateSchedule, GateSpec, Placement, Problem};
use tsn_minplus::Q;
use tsn_model::{Model, Ns, PortId, Window, WindowKind};
use tsn_routing::{cost, fault_sweep, nlr_baseline, synthesize_topology, CostBreakdown, FaultOutcome, RoutingProblem, RoutingSolution};
use tsn_sim::{build_sim, fmt_ns, DelayReport, SimOptions};

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GclRow {
    pub port: PortId,
    pub gate: String,
    pub kind: WindowKind,
    pub offset: Ns,
    pub length: Ns,
}

#[derive(Debug, Clone)]
pub struct GclSynthesis {
    /// The input model with every schedule's windows moved to the synthesized offsets.
    pub model: Model,
    pub rows: Vec<GclRow>,
    /// Stretch each port's openings could take and still not overlap.
    pub eta: BTreeMap<PortId, Q>,
}

impl GclSynthesis {
    pub fn gcl_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["port", "gate", "kind", "offset_ns", "length_ns"]).expect("write to memory");
        for r in &self.rows {
            let kind = format!("{:?}", r.kind);
            w.write_record([&r.port.to_string(), &r.gate, &kind, &r.offset.to_string(), &r.length.to_string()])
                .expect("write to memory");
        }
        finish(w)
    }

    pub fn eta_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["port", "eta", "eta_approx", "shortened"]).expect("write to memory");
        for (p, e) in &self.eta {
            let approx = format!("{:.6}", tsn_minplus::to_f64(*e));
            w.write_record([&p.to_string(), &e.to_string(), &approx, &(*e < Q::from(1)).to_string()])
                .expect("write to memory");
        }
        finish(w)
    }
}

/// Windows of one gate: a single AVB window, or a run of back-to-back
/// windows of the other kinds (guard band, syn and TT usually travel together).
fn gate_groups(windows: &[Window]) -> Vec<Vec<Window>> {
    let mut sorted = windows.to_vec();
    sorted.sort_by_key(|w| w.offset);
    let mut out: Vec<Vec<Window>> = Vec::new();
    for w in sorted {
        let joins = out.last().and_then(|g| g.last()).is_some_and(|l| {
            l.kind != WindowKind::AVB && w.kind != WindowKind::AVB && l.end() == w.offset
        });
        match out.last_mut() {
            Some(g) if joins => g.push(w),
            _ => out.push(vec![w]),
        }
    }
    out
}

fn gate_name(group: &[Window], k: usize) -> String {
    let kind = if group.iter().any(|w| w.kind == WindowKind::TT) {
        "TT"
    } else if group.iter().any(|w| w.kind == WindowKind::AVB) {
        "AVB"
    } else {
        "G"
    };
    format!("{kind}{k}")
}

/// Re-places the gate openings of every scheduled port so none overlap and
/// the common stretch `η` is as large as possible. Starts are rounded up to
/// whole ns with the first gate at 0, lengths are kept, and the result is
/// checked again over the full hyperperiod.
pub fn synth_gcl(model: &Model) -> Result<GclSynthesis, AnalysisError> {
    let mut out = model.clone();
    let mut rows = Vec::new();
    let mut eta = BTreeMap::new();
    for (port, sched) in &model.schedules {
        let err = |reason: String| AnalysisError::Gcl { port: port.to_string(), reason };
        if sched.windows.is_empty() {
            continue;
        }
        let groups = gate_groups(&sched.windows);
        let period = sched.hyperperiod;
        let gates: Vec<GateSpec> = groups
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let start = g[0].offset;
                let end = g.last().expect("non-empty").end();
                GateSpec::new(&gate_name(g, k), period, end - start)
            })
            .collect();
        let s = synthesize(&Problem::new(gates.clone())).map_err(|e| err(e.to_string()))?;
        let shift = s.placements[0].start;
        let starts: Vec<Ns> = s
            .placements
            .iter()
            .map(|p| {
                let t = (p.start - shift).ceil().to_integer();
                t.rem_euclid(period)
            })
            .collect();
        let fixed = GateSchedule {
            placements: s
                .placements
                .iter()
                .zip(&starts)
                .map(|(p, &t)| Placement { id: p.id.clone(), start: Q::from(t), slot: p.slot })
                .collect(),
            eta: Q::from(1),
            quotients: Vec::new(),
        };
        let overlaps = verify_schedule(&fixed, &gates).map_err(|e| err(e.to_string()))?;
        if let Some(o) = overlaps.first() {
            return Err(err(format!("rounded gates {} and {} overlap at {} ns", o.a, o.b, fmt_ns(o.start))));
        }
        let mut windows = Vec::new();
        for ((g, spec), &t) in groups.iter().zip(&gates).zip(&starts) {
            if t + spec.length > period {
                return Err(err(format!("gate {} wraps past the hyperperiod", spec.id)));
            }
            for w in g {
                let offset = t + w.offset - g[0].offset;
                windows.push(Window { kind: w.kind, offset, length: w.length });
                rows.push(GclRow { port: port.clone(), gate: spec.id.clone(), kind: w.kind, offset, length: w.length });
            }
        }
        windows.sort_by_key(|w| w.offset);
        out.schedules.get_mut(port).expect("iterating it").windows = windows;
        eta.insert(port.clone(), s.eta);
    }
    rows.sort_by(|a, b| (&a.port, a.offset).cmp(&(&b.port, b.offset)));
    Ok(GclSynthesis { model: out, rows, eta })
}

#[derive(Debug, Clone)]
pub struct RouteOutput {
    pub problem: RoutingProblem,
    pub solution: RoutingSolution,
    pub cost: CostBreakdown,
    pub faults: Vec<FaultOutcome>,
    /// Cost of the redundant-copies baseline on the same problem.
    pub nlr: CostBreakdown,
}

impl RouteOutput {
    pub fn routes_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["flow", "route", "path"]).expect("write to memory");
        for (flow, routes) in &self.solution.routes {
            for (k, r) in routes.iter().enumerate() {
                w.write_record([flow, &k.to_string(), &r.join(" ")]).expect("write to memory");
            }
        }
        finish(w)
    }

    pub fn cost_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["design", "c_cost", "c_hops", "c_overlap", "total"]).expect("write to memory");
        for (name, c) in [("synthesized", &self.cost), ("nlr", &self.nlr)] {
            w.write_record([name, &c.c_cost.to_string(), &c.c_hops.to_string(), &c.c_overlap.to_string(), &c.total.to_string()])
                .expect("write to memory");
        }
        finish(w)
    }

    pub fn faults_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["failed", "intact", "undelivered"]).expect("write to memory");
        for f in &self.faults {
            let lost: Vec<String> = f.failures.iter().map(|d| format!("{}@{}", d.message, d.destination)).collect();
            w.write_record([&f.failed.to_string(), &f.intact.to_string(), &lost.join(" ")]).expect("write to memory");
        }
        finish(w)
    }

    pub fn config_json(&self) -> String {
        serde_json::to_string_pretty(&self.solution.to_config(&self.problem)).expect("config serializes")
    }
}

/// Topology and routes for the model's end systems and flows using `bridges`
/// candidate bridges, with the single-link fault sweep.
pub fn route(model: &Model, bridges: usize) -> Result<RouteOutput, AnalysisError> {
    let problem = RoutingProblem::from_model(model, bridges);
    let e = |e: tsn_routing::RoutingError| AnalysisError::Routing(e.to_string());
    let solution = synthesize_topology(&problem).map_err(e)?;
    let faults = fault_sweep(&solution, &problem).map_err(e)?;
    let nlr = cost(&nlr_baseline(&problem).map_err(e)?, &problem);
    Ok(RouteOutput { cost: cost(&solution, &problem), problem, solution, faults, nlr })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Best effort: nothing to check against.
    Unbounded,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unbounded => "n/a",
        })
    }
}

/// Simulated delays of one combination with the analytical bounds filled in.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub combo: Combo,
    pub analysis: Analysis,
    pub report: DelayReport,
}

impl Comparison {
    /// A bounded flow fails when a frame took longer than its bound or never
    /// arrived.
    pub fn verdict(&self, flow: &str, dst: &str) -> Verdict {
        let Some(row) = self.report.row(flow, dst) else { return Verdict::Unbounded };
        if row.bound.is_none() {
            return Verdict::Unbounded;
        }
        if row.violated() || row.dropped() > 0 {
            Verdict::Fail
        } else {
            Verdict::Pass
        }
    }

    pub fn passed(&self) -> bool {
        self.report.rows.iter().all(|r| self.verdict(&r.flow, &r.dst) != Verdict::Fail)
    }
}

/// Joined bound and simulation table over all comparisons.
pub fn comparison_csv(runs: &[Comparison]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["flow", "dst", "scheduler", "mode", "sim_min_ns", "sim_mean_ns", "sim_max_ns", "bound_ns", "dropped", "verdict"])
        .expect("write to memory");
    let mut rows = Vec::new();
    for c in runs {
        for r in &c.report.rows {
            let opt = |v: Option<Q>| v.map(fmt_ns).unwrap_or_default();
            rows.push([
                r.flow.clone(),
                r.dst.clone(),
                c.combo.scheduler.to_string(),
                c.combo.mode.to_string(),
                opt(r.min),
                opt(r.mean),
                opt(r.max),
                opt(r.bound),
                r.dropped().to_string(),
                c.verdict(&r.flow, &r.dst).to_string(),
            ]);
        }
    }
    rows.sort_by(|x, y| (&x[0], &x[1]).cmp(&(&y[0], &y[1])));
    for r in rows {
        w.write_record(&r).expect("write to memory");
    }
    finish(w)
}

/// Analyzes and simulates `model` under each combination.
pub fn compare(model: &Model, combos: &[Combo], opts: &AnalysisOptions, sim: &SimOptions) -> Result<Vec<Comparison>, AnalysisError> {
    if opts.shrink.is_some_and(|r| r != Q::from(1)) {
        return Err(AnalysisError::BadShrink(opts.shrink.expect("checked")));
    }
    let mut out = Vec::new();
    for &combo in combos {
        let m = with_combo(model, combo.scheduler, combo.mode);
        let analysis = analyze(&m, opts)?;
        let mut report = build_sim(&m, sim.clone())?.run()?.measure();
        for f in &analysis.flows {
            if let Some(row) = report.row_mut(&f.flow, &f.dst) {
                row.bound = f.bound.map(Q::from);
            }
        }
        out.push(Comparison { combo, analysis, report });
    }
    Ok(out)
}
