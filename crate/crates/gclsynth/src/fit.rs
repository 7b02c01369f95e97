//! Quick feasibility at `η = 1` for ports carrying more gates than the exact
//! search takes.

use crate::{build, GateSchedule, GateSpec, Ns, Problem};
use num_integer::Integer;
use tsn_minplus::Q;

fn apart(ti: Ns, li: Ns, tj: Ns, lj: Ns, g: Ns) -> bool {
    let d = (tj - ti).rem_euclid(g);
    li <= d && d <= g - lj
}

/// First-fit placement in one slot: shortest periods first, longer openings
/// first among equals, each at the earliest start that clears every placed
/// gate. Candidates are 0 and the ends of placed openings shifted by their
/// pairwise gcd. `None` only means this heuristic found no fit.
pub fn first_fit(gates: &[GateSpec]) -> Option<GateSchedule> {
    if gates.iter().any(|g| g.validate().is_err()) {
        return None;
    }
    let mut order: Vec<usize> = (0..gates.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&gates[a], &gates[b]);
        (x.period, -x.length, &x.id).cmp(&(y.period, -y.length, &y.id))
    });
    let mut starts: Vec<Option<Ns>> = vec![None; gates.len()];
    for &k in &order {
        let gk = &gates[k];
        let mut cand: Vec<Ns> = gk.domain.iter().map(|&(lo, _)| lo).collect();
        for (j, t) in starts.iter().enumerate() {
            let Some(tj) = *t else { continue };
            let g = gk.period.gcd(&gates[j].period);
            let base = (tj + gates[j].length).rem_euclid(g);
            cand.extend((0..gk.period / g).map(|m| base + m * g));
        }
        cand.sort_unstable();
        cand.dedup();
        let ok = |t: Ns| {
            gk.domain.iter().any(|&(lo, hi)| lo <= t && t < hi)
                && starts.iter().enumerate().all(|(j, s)| match *s {
                    Some(tj) => apart(t, gk.length, tj, gates[j].length, gk.period.gcd(&gates[j].period)),
                    None => true,
                })
        };
        starts[k] = Some(cand.into_iter().find(|&t| ok(t))?);
    }
    let p = Problem::new(gates.to_vec());
    let starts = starts.into_iter().map(|t| Q::from(t.expect("all placed"))).collect();
    Some(build(&p, &vec![0; gates.len()], starts, Q::from(1)))
}
