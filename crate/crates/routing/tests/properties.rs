use proptest::prelude::*;
use std::collections::BTreeSet;
use tsn_model::{Bridge, FlowSpec, TrafficClass};
use tsn_routing::*;

fn instance(n_ecus: usize, msgs: &[(usize, usize, u32, i128)], tolerance: u32) -> RoutingProblem {
    let ecus: Vec<String> = (1..=n_ecus).map(|i| format!("ECU{i}")).collect();
    let messages = msgs
        .iter()
        .enumerate()
        .filter(|(_, m)| m.0 % n_ecus != m.1 % n_ecus)
        .map(|(k, &(s, d, bytes, period))| FlowSpec {
            id: format!("m{k:03}"),
            class: TrafficClass::TT,
            src: ecus[s % n_ecus].clone(),
            dst: vec![ecus[d % n_ecus].clone()],
            size_bytes: bytes,
            period_ns: period * 1_000_000,
            tolerance,
            routes: Vec::new(),
        })
        .collect();
    let library = vec![
        Bridge { kind: "sw4".into(), cost: 40, ports: 4 },
        Bridge { kind: "sw8".into(), cost: 70, ports: 8 },
    ];
    RoutingProblem::new(ecus, 4, library, messages)
}

fn arb_msgs() -> impl Strategy<Value = Vec<(usize, usize, u32, i128)>> {
    prop::collection::vec((0usize..6, 0usize..6, 64u32..1518, prop::sample::select(vec![1i128, 2, 3, 10])), 1..20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn routes_are_disjoint_and_survive_single_faults(n in 3usize..7, msgs in arb_msgs()) {
        let p = instance(n, &msgs, 2);
        let s = synthesize_topology(&p).unwrap();
        for m in &p.messages {
            let rs = &s.routes[&m.id];
            prop_assert_eq!(rs.len(), 2);
            let a: BTreeSet<_> = path_links(&rs[0]).collect();
            prop_assert!(path_links(&rs[1]).all(|l| !a.contains(&l)));
            for r in rs {
                prop_assert_eq!(r.iter().collect::<BTreeSet<_>>().len(), r.len());
                prop_assert!(path_links(r).all(|l| s.links.contains(&l)));
            }
        }
        for o in fault_sweep(&s, &p).unwrap() {
            prop_assert!(o.intact, "failing {} broke a tolerance-2 message", o.failed);
            prop_assert!(o.failures.is_empty());
        }
    }

    #[test]
    fn synthesis_never_costs_more_than_nlr(n in 3usize..7, msgs in arb_msgs(), tol in 1u32..3) {
        let p = instance(n, &msgs, tol);
        let s = synthesize_topology(&p).unwrap();
        let nlr = nlr_baseline(&p).unwrap();
        prop_assert!(s.cost.total <= nlr.cost.total, "{} > {}", s.cost.total, nlr.cost.total);
    }

    #[test]
    fn alpha_only_rescales_the_hop_term(n in 3usize..6, msgs in arb_msgs()) {
        let p = instance(n, &msgs, 1);
        let s = synthesize_topology(&p).unwrap();
        let mut q = p.clone();
        q.alpha = tsn_minplus::Q::new(7, 2);
        let c = cost(&s, &q);
        prop_assert_eq!(c.c_cost, s.cost.c_cost);
        prop_assert_eq!(c.c_hops, s.cost.c_hops);
        prop_assert_eq!(c.c_overlap, s.cost.c_overlap);
    }

    #[test]
    fn dropping_an_unused_link_never_raises_cost(n in 3usize..6, msgs in arb_msgs()) {
        let p = instance(n, &msgs, 1);
        let s = synthesize_topology(&p).unwrap();
        let mut padded = s.clone();
        if let Some(Element::Link(a, b)) = p.decision_elements().into_iter().find(|e| matches!(e, Element::Link(a, b)
            if s.bridges.contains_key(a) && s.bridges.contains_key(b) && !s.links.contains(&(a.clone(), b.clone()))))
        {
            padded.links.insert((a, b));
            prop_assert!(cost(&s, &p).total <= cost(&padded, &p).total);
        }
    }
}
