use std::collections::BTreeMap;
use std::path::Path;
use tsn_minplus::Q;
use tsn_model::*;
use tsn_sim::*;

const US: i128 = 1000;

fn node(id: &str, kind: NodeKind) -> Node {
    Node { id: id.into(), kind }
}

fn flow(id: &str, class: TrafficClass, route: &[&str], bytes: u32, period: Ns) -> FlowSpec {
    let route: Vec<String> = route.iter().map(|s| s.to_string()).collect();
    FlowSpec {
        id: id.into(),
        class,
        src: route[0].clone(),
        dst: vec![route.last().unwrap().clone()],
        size_bytes: bytes,
        period_ns: period,
        tolerance: 1,
        routes: vec![route],
    }
}

/// ES1 - ES2 over one 100 Mbit/s link.
fn pair(flows: Vec<FlowSpec>) -> Model {
    Model {
        nodes: vec![node("ES1", NodeKind::EndSystem), node("ES2", NodeKind::EndSystem)],
        links: vec![Link { a: "ES1".into(), b: "ES2".into(), rate_mbps: 100 }],
        bridge_library: vec![],
        flows,
        schedules: BTreeMap::new(),
        index_tables: vec![],
        options: Options::default(),
    }
}

fn schedule(scheduler: Scheduler, mode: Mode, windows: Vec<Window>) -> PortSchedule {
    let rate = Q::new(1, 10);
    PortSchedule {
        port: PortId::new("ES1", "ES2"),
        hyperperiod: 250 * US,
        windows,
        scheduler,
        mode,
        idle_slope_a: rate * Q::new(60, 100),
        idle_slope_b: rate * Q::new(15, 100),
        rate,
    }
}

fn quiet() -> SimOptions {
    SimOptions { preamble: false, random_phases: false, duration: 1_000 * US, ..SimOptions::default() }
}

fn tc2() -> Model {
    Model::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../model/fixtures/tc2.json")).unwrap()
}

#[test]
fn one_full_frame_over_one_hop() {
    let m = pair(vec![flow("BE1", TrafficClass::BE, &["ES1", "ES2"], 1518, 500 * US)]);
    let run = build_sim(&m, quiet()).unwrap().run().unwrap();
    let r = run.measure();
    assert_eq!(r.rows[0].max, Some(Q::from(121_440)));

    let opts = SimOptions { propagation: 500, ..quiet() };
    let r = build_sim(&m, opts).unwrap().run().unwrap().measure();
    assert_eq!(r.rows[0].max, Some(Q::from(121_940)));

    // preamble and gap add 20 B on the wire
    let r = build_sim(&m, SimOptions { preamble: true, ..quiet() }).unwrap().run().unwrap().measure();
    assert_eq!(r.rows[0].max, Some(Q::from(123_040)));
}

#[test]
fn idle_network_has_no_jitter() {
    let m = pair(vec![flow("BE1", TrafficClass::BE, &["ES1", "ES2"], 300, 100 * US)]);
    let r = build_sim(&m, SimOptions { random_phases: true, seed: 9, ..quiet() }).unwrap().run().unwrap().measure();
    let row = &r.rows[0];
    assert_eq!(row.delivered, 10);
    assert_eq!(row.jitter, Some(Q::from(0)));
    assert_eq!(row.min, Some(Q::from(24 * US)));
}

#[test]
fn empty_flow_set_delivers_nothing() {
    let run = build_sim(&pair(vec![]), quiet()).unwrap().run().unwrap();
    assert!(run.frames.is_empty());
    assert!(run.measure().rows.is_empty());
}

#[test]
fn tc2_builds_and_duplicates_do_not() {
    let m = tc2();
    let sim = build_sim(&m, SimOptions::default()).unwrap();
    assert_eq!(sim.port_ids().len(), 21);
    let mut dup = m.clone();
    dup.flows.push(m.flows[3].clone());
    assert_eq!(build_sim(&dup, SimOptions::default()).unwrap_err(), SimError::DuplicateFlow("TT4".into()));
}

#[test]
fn bad_routes_and_durations_are_refused() {
    let mut m = pair(vec![flow("X", TrafficClass::BE, &["ES1", "ES2"], 100, 100 * US)]);
    m.flows[0].routes = vec![vec!["ES1".into(), "ES3".into()]];
    m.flows[0].dst = vec!["ES3".into()];
    assert!(matches!(build_sim(&m, quiet()), Err(SimError::NoLink { .. })));
    m.flows[0].dst = vec!["ES2".into()];
    assert!(matches!(build_sim(&m, quiet()), Err(SimError::NoRoute { .. })));

    let mut m = pair(vec![]);
    m.schedules.insert(PortId::new("ES1", "ES2"), schedule(Scheduler::CbsTas, Mode::NonPreemption, vec![]));
    let short = SimOptions { duration: 400 * US, ..quiet() };
    assert!(matches!(build_sim(&m, short), Err(SimError::DurationTooShort { .. })));
}

/// BE frame of 1500 B at 0 and a 100 B TT frame at 100 µs, TT window
/// [100, 200) µs of 250 µs.
fn window_fixture(mode: Mode) -> Model {
    let mut m = pair(vec![
        flow("BE1", TrafficClass::BE, &["ES1", "ES2"], 1500, 1_000 * US),
        flow("TT1", TrafficClass::TT, &["ES1", "ES2"], 100, 1_000 * US),
    ]);
    let w = vec![Window { kind: WindowKind::TT, offset: 100 * US, length: 100 * US }];
    m.schedules.insert(PortId::new("ES1", "ES2"), schedule(Scheduler::CbsTas, mode, w));
    m
}

fn shifted(run: &SimRun, flow: &str) -> Vec<(Q, Q)> {
    let t0 = Q::from(run.plan.start_of(Phase::FrameSend).unwrap());
    let f = run.frames.iter().find(|f| f.flow == flow).unwrap();
    f.fragments.iter().map(|x| (x.start - t0, x.end - t0)).collect()
}

#[test]
fn non_preemption_holds_the_frame_for_the_window() {
    let run = build_sim(&window_fixture(Mode::NonPreemption), quiet()).unwrap().run().unwrap();
    // BE cannot finish before the window, so it waits for the next opening
    assert_eq!(shifted(&run, "BE1"), vec![(Q::from(200 * US), Q::from(320 * US))]);
    assert_eq!(shifted(&run, "TT1"), vec![(Q::from(100 * US), Q::from(108 * US))]);
}

#[test]
fn preemption_cuts_at_the_window() {
    let run = build_sim(&window_fixture(Mode::Preemption), quiet()).unwrap().run().unwrap();
    // 1250 B go out before the window, the rest plus 24 B overhead after it
    assert_eq!(shifted(&run, "BE1"), vec![(Q::from(0), Q::from(100 * US)), (Q::from(200 * US), Q::new(221_920, 1))]);
    let f = run.frames.iter().find(|f| f.flow == "BE1").unwrap();
    let sum: Q = f.fragments.iter().map(|x| x.bits).sum();
    assert_eq!(sum, f.bits);
    let holds = run.trace.rows.iter().filter(|r| r.kind == EventKind::PreemptHold).count();
    let resumes = run.trace.rows.iter().filter(|r| r.kind == EventKind::PreemptRelease).count();
    assert_eq!((holds, resumes), (1, 1));
}

/// Strict priority, no windows. BE leaves ES1 at 0; a 125 B CDT frame from
/// ES3 reaches ES1 at 10 µs while BE is on the wire.
fn sp_fixture(mode: Mode) -> Model {
    let mut m = pair(vec![
        flow("BE1", TrafficClass::BE, &["ES1", "ES2"], 1500, 1_000 * US),
        flow("CDT1", TrafficClass::CDT, &["ES3", "ES1", "ES2"], 125, 1_000 * US),
    ]);
    m.nodes.push(node("ES3", NodeKind::EndSystem));
    m.links.push(Link { a: "ES3".into(), b: "ES1".into(), rate_mbps: 100 });
    m.schedules.insert(PortId::new("ES1", "ES2"), schedule(Scheduler::CbsSp, mode, vec![]));
    m
}

fn on_port(run: &SimRun, flow: &str, port: &str) -> Vec<(Q, Q)> {
    let t0 = Q::from(run.plan.start_of(Phase::FrameSend).unwrap());
    let f = run.frames.iter().find(|f| f.flow == flow).unwrap();
    f.fragments.iter().filter(|x| x.port == port).map(|x| (x.start - t0, x.end - t0)).collect()
}

#[test]
fn express_frame_interrupts_under_preemption() {
    let run = build_sim(&sp_fixture(Mode::Preemption), quiet()).unwrap().run().unwrap();
    assert_eq!(on_port(&run, "CDT1", "ES1->ES2"), vec![(Q::from(10 * US), Q::from(20 * US))]);
    // the rest (1375 B) comes back with 24 B of overhead
    assert_eq!(
        on_port(&run, "BE1", "ES1->ES2"),
        vec![(Q::from(0), Q::from(10 * US)), (Q::from(20 * US), Q::new(131_920, 1))]
    );
    assert_eq!(run.measure().row("CDT1", "ES2").unwrap().max, Some(Q::from(20 * US)));
}

#[test]
fn express_frame_waits_without_preemption() {
    let run = build_sim(&sp_fixture(Mode::NonPreemption), quiet()).unwrap().run().unwrap();
    assert_eq!(on_port(&run, "BE1", "ES1->ES2"), vec![(Q::from(0), Q::from(120 * US))]);
    assert_eq!(on_port(&run, "CDT1", "ES1->ES2"), vec![(Q::from(120 * US), Q::from(130 * US))]);
}

#[test]
fn same_seed_same_files() {
    let m = tc2();
    let opts = SimOptions { seed: 7, duration: 20_000 * US, ..SimOptions::default() };
    let a = build_sim(&m, opts.clone()).unwrap().run().unwrap();
    let b = build_sim(&m, opts.clone()).unwrap().run().unwrap();
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    assert_eq!(a.measure().to_csv(), b.measure().to_csv());
    let c = build_sim(&m, SimOptions { seed: 8, ..opts }).unwrap().run().unwrap();
    assert_ne!(a.trace.to_csv(), c.trace.to_csv());
}

#[test]
fn sync_phases_wrap_the_data() {
    let m = tc2();
    let run = build_sim(&m, SimOptions { duration: 10_000 * US, ..SimOptions::default() }).unwrap().run().unwrap();
    let phases: Vec<Phase> = run.plan.phases.iter().map(|p| p.0).collect();
    assert_eq!(phases, Phase::ORDER.to_vec());
    let at = |p| run.plan.start_of(p).unwrap();
    assert_eq!(at(Phase::Initial), 0);
    assert_eq!(at(Phase::FixedFramePropagation), 200 * US);
    assert!(at(Phase::Ack) - at(Phase::FixedFramePropagation) < 500 * US);
    assert!(at(Phase::Buffer) - at(Phase::Ack) < 1_000 * US);
    assert!(at(Phase::FrameSend) - at(Phase::Buffer) <= 250 * US + 250 * US);
    assert_eq!(at(Phase::FrameSend) % 250_000, 0);

    let data = |r: &&TraceRow| r.kind == EventKind::TransmissionStart && !r.flow.starts_with("sync-");
    let first = run.trace.rows.iter().filter(data).map(|r| r.time).min().unwrap();
    let last = run.trace.rows.iter().filter(|r| r.kind == EventKind::TransmissionEnd && !r.flow.starts_with("sync-")).map(|r| r.time).max().unwrap();
    assert!(first >= Q::from(at(Phase::FrameSend)));
    assert!(last <= Q::from(at(Phase::Finish)));
    let fin = run.trace.rows.iter().filter(|r| r.flow == "sync-finish").map(|r| r.time).max().unwrap();
    assert!(fin - Q::from(at(Phase::Finish)) < Q::from(200 * US));
}

#[test]
fn every_released_frame_is_accounted_for() {
    let m = tc2();
    for mode in [Mode::NonPreemption, Mode::Preemption] {
        let mut m = m.clone();
        for s in m.schedules.values_mut() {
            *s = s.with(Scheduler::CbsTas, mode);
        }
        let run = build_sim(&m, SimOptions { seed: 3, duration: 50_000 * US, ..SimOptions::default() }).unwrap().run().unwrap();
        let r = run.measure();
        let released: u64 = r.rows.iter().map(|x| x.released).sum();
        assert_eq!(released as usize, run.frames.len());
        assert!(r.rows.iter().all(|x| x.delivered + x.dropped() == x.released));
        for f in &run.frames {
            // per port, the fragments add up to the frame
            for h in &f.hops {
                let s: Q = f.fragments.iter().filter(|x| x.port == h.port).map(|x| x.bits).sum();
                assert_eq!(s, f.bits, "{} {} at {}", f.flow, f.seq, h.port);
            }
        }
    }
}

#[test]
fn fixed_payload_round_trips() {
    let p = FixedPayload { idle_slope: 60_000_000, send_slope: 40_000_000, frame_length: 1518, traffic_type: 3 };
    let b = p.encode();
    assert_eq!(&b[..8], &60_000_000u64.to_be_bytes());
    assert_eq!(FixedPayload::decode(&b), p);
}

#[test]
fn trace_csv_has_the_agreed_columns() {
    let m = pair(vec![flow("BE1", TrafficClass::BE, &["ES1", "ES2"], 64, 100 * US)]);
    let csv = build_sim(&m, quiet()).unwrap().run().unwrap().trace.to_csv();
    assert!(csv.starts_with("time_ns,event,node,port,flow,seq,detail\n"));
    assert!(csv.contains(",transmission-start,ES1,ES1->ES2,BE1,0,"));
    assert_eq!(fmt_ns(Q::new(7, 3)), "2.333");
}
