use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsn_credit::oracle::{run, Lane, PortScenario, Preemption};
use tsn_credit::scenarios::{worst_case_a, worst_case_b, Lengths};
use tsn_credit::*;

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn spec_a() -> CreditParams {
    // 100 Mbit/s, 60 % idle slope, largest interfering frame 1518 B
    CreditParams::new(AvbClass::A, q(6, 100), q(1, 10), Q::from(12144), Q::from(12144)).unwrap()
}

#[test]
fn class_a_examples() {
    let p = spec_a();
    let b = credit_bounds(&p).unwrap();
    assert_eq!(b.v_max, q(72864, 10));
    assert_eq!(b.v_min, q(-48576, 10));
    let t = phase_times(&p, b).unwrap();
    assert_eq!(t.up, Q::from(121_440));
    assert_eq!(t.down, Q::from(303_600));
}

#[test]
fn class_b_formula_matches_hand_value() {
    let c = q(1, 10);
    let a = CreditParams::class_a(q(6, 100), c, Q::from(12144), Q::from(8000), Q::from(12144)).unwrap();
    let b = CreditParams::class_b(q(15, 1000), c, Q::from(8000), Q::from(12144), &a).unwrap();
    // I_B (12144/C + 12144/C + (12144/C)(0.06/0.04))
    let expect = q(15, 1000) * (Q::from(121_440) * 2 + Q::from(121_440) * q(3, 2));
    assert_eq!(credit_bounds(&b).unwrap().v_max, expect);
    assert_eq!(credit_bounds(&b).unwrap().v_min, Q::from(80_000) * (q(15, 1000) - c));
}

#[test]
fn zero_crossing_example() {
    let z = zero_crossing(Q::zero(), Q::from(100), Q::from(10), Q::from(-50)).unwrap();
    assert_eq!(z.k, Q::from(2));
    assert_eq!(z.t_eq, q(20, 3));
    // the literal closed form lands on the mirror image
    assert_eq!(t_eq_literal(Q::zero(), Q::from(100), Q::from(10), Q::from(-50)).unwrap(), q(-20, 3));
    assert_eq!(zero_crossing(Q::zero(), Q::from(1), Q::from(10), Q::from(2)), Err(CreditError::NoSignChange));
    assert_eq!(zero_crossing(Q::from(3), Q::from(1), Q::from(3), Q::from(-2)), Err(CreditError::DegenerateSegment));
}

#[test]
fn geometry_example() {
    let c = Q::from(100);
    let pa = CreditParams::new(AvbClass::A, Q::from(60), c, Q::zero(), Q::zero()).unwrap();
    let pb = CreditParams::new(AvbClass::B, Q::from(15), c, Q::zero(), Q::zero()).unwrap();
    let an = GeometryAnchors {
        t_m: Q::zero(),
        v_a_m: Q::from(100),
        v_b_m: Q::from(40),
        t1: Q::zero(),
        v_a1: Q::from(100),
        t2: Q::from(10),
        v_a2: Q::from(-50),
        v_b1: Q::from(40),
        v_b2: Q::from(190),
    };
    let g = credit_geometry(&pa, &pb, an).unwrap();
    // rising lines 100 + 60 t and 40 + 15 t meet at t = -4/3
    assert_eq!(g.t_same, q(-4, 3));
    assert_eq!(Q::from(100) + Q::from(60) * g.t_same, g.v_same);
    assert_eq!(Q::from(40) + Q::from(15) * g.t_same, g.v_same);
    assert_eq!((g.k, g.t_eq, g.k1), (Q::from(2), q(20, 3), Q::from(2)));
    assert_eq!(g.v_mid_b, Q::from(140));
    // descending A (send slope -40) against ascending B
    let (t, v) = intersection(Q::zero(), Q::from(100), Q::from(-40), Q::from(40), Q::from(15)).unwrap();
    assert_eq!(t, q(12, 11));
    assert_eq!(v, Q::from(40) + Q::from(15) * t);
    let same = CreditParams::new(AvbClass::B, Q::from(60), c, Q::zero(), Q::zero()).unwrap();
    assert_eq!(credit_geometry(&pa, &same, an), Err(CreditError::Parallel));
}

#[test]
fn midpoint_crossing_is_possible() {
    // A falls from 100 at slope -40, B rises at 15; choose B's start so the
    // lines meet at t = 1, the middle of [0, 2]
    let vb = Q::from(100 - 40 - 15);
    assert!(crosses_at_midpoint(Q::zero(), Q::from(2), Q::from(100), Q::from(-40), vb, Q::from(15)));
}

fn random_case(rng: &mut ChaCha8Rng, lb_le_lbe: bool) -> (Q, Q, Q, Lengths) {
    let c = match rng.gen_range(0..3) {
        0 => q(1, 10),
        1 => Q::from(1),
        _ => q(rng.gen_range(1..50), rng.gen_range(1..20)),
    };
    let pa = rng.gen_range(1..90);
    let pb = rng.gen_range(1..(100 - pa));
    let bytes = |rng: &mut ChaCha8Rng| Q::from(8 * rng.gen_range(64..=1518) as i128);
    let (a, mut b, mut be) = (bytes(rng), bytes(rng), bytes(rng));
    if lb_le_lbe && b > be {
        std::mem::swap(&mut b, &mut be);
    }
    (c, c * q(pa, 100), c * q(pb, 100), Lengths { a, b, be })
}

fn first_run(trace: &CreditTrace, cause: Cause) -> Q {
    let (s, e, _) = trace.runs().into_iter().find(|r| r.2 == cause).unwrap();
    e - s
}

#[test]
fn class_a_extrema_and_phases_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..150 {
        let (c, ia, ib, l) = random_case(&mut rng, false);
        let (s, pa) = worst_case_a(c, ia, ib, l).unwrap();
        let tr = credit_trace_oracle(&s, AvbClass::A).unwrap();
        let b = credit_bounds(&pa).unwrap();
        assert_eq!((tr.max(), tr.min()), (b.v_max, b.v_min));
        let ph = phase_times(&pa, b).unwrap();
        assert_eq!(first_run(&tr, Cause::IdleGain), ph.up);
        assert_eq!(first_run(&tr, Cause::SendDrain), ph.down);
    }
}

#[test]
fn class_b_extrema_and_phases_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..150 {
        let (c, ia, ib, l) = random_case(&mut rng, true);
        let (s, _, pb) = worst_case_b(c, ia, ib, l).unwrap();
        let tr = credit_trace_oracle(&s, AvbClass::B).unwrap();
        let b = credit_bounds(&pb).unwrap();
        assert_eq!((tr.max(), tr.min()), (b.v_max, b.v_min));
        let ph = phase_times(&pb, b).unwrap();
        assert_eq!(first_run(&tr, Cause::IdleGain), ph.up);
        assert_eq!(first_run(&tr, Cause::SendDrain), ph.down);
    }
}

#[test]
fn class_b_formula_overestimates_when_b_frames_dominate() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut strict = 0;
    for _ in 0..100 {
        let (c, ia, ib, mut l) = random_case(&mut rng, true);
        std::mem::swap(&mut l.b, &mut l.be);
        let (s, _, pb) = worst_case_b(c, ia, ib, l).unwrap();
        let tr = credit_trace_oracle(&s, AvbClass::B).unwrap();
        let f = credit_bounds(&pb).unwrap().v_max;
        assert!(tr.max() <= f);
        strict += (tr.max() < f) as usize;
    }
    assert!(strict > 0);
}

#[test]
fn timing_differences_agree_with_phase_times() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let (c, ia, ib, l) = random_case(&mut rng, false);
        let pa = CreditParams::class_a(ia, c, l.a, l.b, l.be).unwrap();
        let pb = CreditParams::class_b(ib, c, l.b, l.be, &pa).unwrap();
        let (ba, bb) = (credit_bounds(&pa).unwrap(), credit_bounds(&pb).unwrap());
        let (ta, tb) = (phase_times(&pa, ba).unwrap(), phase_times(&pb, bb).unwrap());
        // signed convention: a sending phase counts as negative time
        assert_eq!(idle_time_difference(&pa, ba, &pb, bb).unwrap(), tb.up - ta.up);
        assert_eq!(send_time_difference(&pa, ba, &pb, bb).unwrap(), -tb.down + ta.down);
        assert_eq!(send_vs_idle_a(&pa, ba).unwrap(), -ta.down - ta.up);
        assert_eq!(send_vs_idle_b(&pb, bb).unwrap(), -tb.down - tb.up);
    }
}

#[test]
fn credit_freezes_while_gate_is_closed() {
    let c = Q::from(1);
    let mut s = PortScenario::new(c, q(1, 2), q(1, 4), Q::from(100));
    s.gates[Lane::A as usize] = Some(vec![(Q::from(30), Q::from(100))]);
    s.push(Q::zero(), Lane::BE, Q::from(10));
    s.push(Q::from(1), Lane::A, Q::from(8));
    let r = run(&s).unwrap();
    let tr = r.trace(AvbClass::A);
    // A gate closed until 30: frozen at zero, then starts immediately
    assert_eq!(tr.value_at(Q::from(29)).unwrap(), Q::zero());
    assert_eq!(tr.min(), Q::from(-4));
    assert_eq!(r.completions(2)[1], Some(Q::from(38)));
    // recovers at the idle slope after the queue empties
    assert_eq!(tr.value_at(Q::from(42)).unwrap(), Q::from(-2));
    assert_eq!(tr.final_value(), Q::zero());
}

#[test]
fn frame_that_cannot_finish_waits_with_frozen_credit() {
    let c = Q::from(1);
    let mut s = PortScenario::new(c, q(1, 2), q(1, 4), Q::from(100));
    s.gates[Lane::A as usize] = Some(vec![(Q::zero(), Q::from(20)), (Q::from(50), Q::from(100))]);
    s.in_flight = Some(s.push(Q::zero(), Lane::BE, Q::from(6)));
    s.push(Q::zero(), Lane::A, Q::from(16));
    let r = run(&s).unwrap();
    let tr = r.trace(AvbClass::A);
    // gains while the BE frame is on the wire until 4 = 20 - 16, then frozen
    assert_eq!(tr.max(), Q::from(2));
    assert_eq!(tr.value_at(Q::from(49)).unwrap(), Q::from(2));
    assert_eq!(r.completions(2)[1], Some(Q::from(66)));
}

#[test]
fn reset_when_queue_empties_with_positive_credit() {
    let c = Q::from(1);
    let mut s = PortScenario::new(c, q(1, 2), q(1, 4), Q::from(100));
    s.in_flight = Some(s.push(Q::zero(), Lane::BE, Q::from(40)));
    s.push(Q::zero(), Lane::A, Q::from(10));
    let tr = credit_trace_oracle(&s, AvbClass::A).unwrap();
    // 20 after waiting, 15 after sending, then reset
    assert_eq!(tr.max(), Q::from(20));
    let reset = tr.events.iter().find(|e| e.cause == Cause::Reset).unwrap();
    assert_eq!(reset.time, Q::from(50));
    assert!(tr.min().is_zero());
}

#[test]
fn express_frames_freeze_credit_and_preempt() {
    let c = Q::from(1);
    let mut s = PortScenario::new(c, q(1, 2), q(1, 4), Q::from(400));
    s.preemption = Preemption::On { min_fragment: Q::from(64), overhead: Q::from(24) };
    s.push(Q::zero(), Lane::A, Q::from(300));
    s.push(Q::from(10), Lane::Express, Q::from(50));
    let r = run(&s).unwrap();
    // cut once 64 bits are out, express runs 64..114, resume carries 24 extra bits
    let tx: Vec<_> = r.transmissions.iter().map(|t| (t.lane, t.start, t.end)).collect();
    assert_eq!(
        tx,
        vec![
            (Lane::A, Q::zero(), Q::from(64)),
            (Lane::Express, Q::from(64), Q::from(114)),
            (Lane::A, Q::from(114), Q::from(114 + 24 + 236)),
        ]
    );
    let tr = r.trace(AvbClass::A);
    assert_eq!(tr.value_at(Q::from(64)).unwrap(), Q::from(-32));
    assert_eq!(tr.value_at(Q::from(114)).unwrap(), Q::from(-32));
    assert!(tr.min().is_negative());
}

#[test]
fn hold_cuts_before_the_gate_closes() {
    let c = Q::from(1);
    let mut s = PortScenario::new(c, q(1, 2), q(1, 4), Q::from(400));
    s.preemption = Preemption::On { min_fragment: Q::from(64), overhead: Q::from(24) };
    s.gates[Lane::BE as usize] = Some(vec![(Q::zero(), Q::from(100)), (Q::from(150), Q::from(400))]);
    s.push(Q::zero(), Lane::BE, Q::from(200));
    let r = run(&s).unwrap();
    let tx: Vec<_> = r.transmissions.iter().map(|t| (t.start, t.end, t.last)).collect();
    assert_eq!(tx, vec![(Q::zero(), Q::from(100), false), (Q::from(150), Q::from(274), true)]);
}
