//! The simulator's credit trace on a single port against the credit
//! module's exact port model, on randomly generated scenarios.

use proptest::prelude::*;
use std::collections::BTreeMap;
use tsn_credit::oracle::{run as oracle_run, Cause, Lane as OLane, PortScenario, Preemption as OPre};
use tsn_credit::AvbClass;
use tsn_minplus::Q;
use tsn_model::*;
use tsn_sim::gate::Gate;
use tsn_sim::port::{CreditCause, Lane};
use tsn_sim::*;

const US: i128 = 1000;

fn model(flows: &[(TrafficClass, u32, i128)], scheduler: Scheduler, mode: Mode, layout: usize) -> Model {
    let rate = Q::new(1, 10);
    let w = |kind, o, l| Window { kind, offset: o * US, length: l * US };
    let windows = match layout {
        0 => vec![],
        1 => vec![w(WindowKind::Syn, 58, 2), w(WindowKind::TT, 60, 120), w(WindowKind::AVB, 180, 15)],
        _ => vec![w(WindowKind::TT, 0, 40), w(WindowKind::Syn, 100, 5), w(WindowKind::TT, 150, 30)],
    };
    let schedule = PortSchedule {
        port: PortId::new("ES1", "ES2"),
        hyperperiod: 250 * US,
        windows,
        scheduler,
        mode,
        idle_slope_a: rate * Q::new(40, 100),
        idle_slope_b: rate * Q::new(25, 100),
        rate,
    };
    let route = vec!["ES1".to_string(), "ES2".to_string()];
    Model {
        nodes: vec![Node { id: "ES1".into(), kind: NodeKind::EndSystem }, Node { id: "ES2".into(), kind: NodeKind::EndSystem }],
        links: vec![Link { a: "ES1".into(), b: "ES2".into(), rate_mbps: 100 }],
        bridge_library: vec![],
        flows: flows
            .iter()
            .enumerate()
            .map(|(k, &(class, bytes, period))| FlowSpec {
                id: format!("F{k:02}"),
                class,
                src: "ES1".into(),
                dst: vec!["ES2".into()],
                size_bytes: bytes,
                period_ns: period * US,
                tolerance: 1,
                routes: vec![route.clone()],
            })
            .collect(),
        schedules: BTreeMap::from([(PortId::new("ES1", "ES2"), schedule)]),
        index_tables: vec![],
        options: Options::default(),
    }
}

fn olane(l: Lane) -> OLane {
    match l {
        Lane::Express => OLane::Express,
        Lane::A => OLane::A,
        Lane::B => OLane::B,
        Lane::BE => OLane::BE,
    }
}

fn cause(c: CreditCause) -> Cause {
    match c {
        CreditCause::IdleGain => Cause::IdleGain,
        CreditCause::SendDrain => Cause::SendDrain,
        CreditCause::Frozen => Cause::Frozen,
        CreditCause::Reset => Cause::Reset,
    }
}

fn check(m: &Model, seed: u64) -> Result<(), TestCaseError> {
    let opts = SimOptions { seed, preamble: false, duration: 2_000 * US, ..SimOptions::default() };
    let sim = build_sim(m, opts.clone()).unwrap();
    let run = sim.run().unwrap();
    let t0 = Q::from(sim.send_start);
    let pid = PortId::new("ES1", "ES2");
    let port = build_port(m, &pid, &opts).unwrap();
    let last = run.trace.rows.iter().filter(|r| r.port == "ES1->ES2").map(|r| r.time).max().unwrap() - t0;

    let horizon = last.ceil().to_integer() + 2_500 * US;
    let s = &m.schedules[&pid];
    let mut sc = PortScenario::new(s.rate, s.idle_slope_a, s.idle_slope_b, Q::from(horizon));
    for lane in Lane::ALL {
        let g = &port.gates[lane as usize];
        sc.gates[lane as usize] = match g {
            Gate::Always => None,
            _ => Some(g.intervals(sim.send_start, sim.send_start + horizon).into_iter().map(|(a, b)| (a - t0, b - t0)).collect()),
        };
    }
    sc.overrun = port.overrun;
    if let Some(p) = port.preemption {
        sc.preemption = OPre::On { min_fragment: p.min_fragment_bits, overhead: p.overhead_bits };
    }
    for f in &run.frames {
        let class = m.flow(&f.flow).unwrap().class;
        sc.push(f.release - t0, olane(lane_of(class)), f.bits);
    }
    let o = oracle_run(&sc).unwrap();

    for (k, class) in [(0, AvbClass::A), (1, AvbClass::B)] {
        let name = if k == 0 { "A" } else { "B" };
        let mine: Vec<(Q, Q, Cause)> =
            run.trace.credit_events("ES1->ES2", name).into_iter().map(|(t, c, x)| (t - t0, c, cause(x))).collect();
        let theirs: Vec<(Q, Q, Cause)> =
            o.trace(class).events.iter().filter(|e| e.time <= last).map(|e| (e.time, e.credit, e.cause)).collect();
        prop_assert_eq!(mine, theirs, "class {}", name);
    }
    let mut wire: Vec<(Q, Q)> = run.frames.iter().flat_map(|f| f.fragments.iter().map(|x| (x.start - t0, x.end - t0))).collect();
    wire.sort();
    let mut theirs: Vec<(Q, Q)> = o.transmissions.iter().filter(|x| x.end <= last).map(|x| (x.start, x.end)).collect();
    theirs.sort();
    prop_assert_eq!(wire, theirs);
    Ok(())
}

fn arb_flows() -> impl Strategy<Value = Vec<(TrafficClass, u32, i128)>> {
    let class = prop::sample::select(vec![TrafficClass::TT, TrafficClass::A, TrafficClass::B, TrafficClass::BE]);
    let period = prop::sample::select(vec![125i128, 250, 500, 1000]);
    prop::collection::vec((class, 64u32..=1518, period), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn credit_trace_matches_the_oracle(
        flows in arb_flows(),
        tas in any::<bool>(),
        pre in any::<bool>(),
        layout in 0usize..3,
        seed in any::<u64>(),
    ) {
        let scheduler = if tas { Scheduler::CbsTas } else { Scheduler::CbsSp };
        let mode = if pre { Mode::Preemption } else { Mode::NonPreemption };
        check(&model(&flows, scheduler, mode, layout), seed)?;
    }
}

#[test]
fn saturated_port_matches_the_oracle() {
    let flows = [
        (TrafficClass::A, 1518, 125),
        (TrafficClass::A, 800, 125),
        (TrafficClass::B, 1518, 250),
        (TrafficClass::BE, 1518, 125),
        (TrafficClass::TT, 500, 250),
    ];
    for (s, mode, layout) in [
        (Scheduler::CbsTas, Mode::NonPreemption, 1),
        (Scheduler::CbsTas, Mode::Preemption, 2),
        (Scheduler::CbsSp, Mode::Preemption, 1),
        (Scheduler::CbsSp, Mode::NonPreemption, 0),
    ] {
        check(&model(&flows, s, mode, layout), 5).unwrap();
    }
}
