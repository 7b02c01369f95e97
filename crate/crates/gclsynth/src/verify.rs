use crate::{GateSchedule, GateSpec, GclError, Placed};
use num_integer::Integer;
use tsn_minplus::Q;

/// Two openings that intersect on `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub a: String,
    pub b: String,
    pub start: Q,
    pub end: Q,
}

/// Openings enumerated per gate before giving up.
const MAX_OPENINGS: i128 = 5_000_000;

fn openings(g: &Placed, from: i128, to: i128) -> Vec<(Q, Q)> {
    let t = Q::from(g.period);
    (from..to).map(|k| (g.start + t * Q::from(k), g.start + t * Q::from(k) + g.length)).collect()
}

/// Lays every gate's openings (stretched by the schedule's `η`) over one
/// hyperperiod of all periods and lists each intersection of two gates that
/// share a slot, ordered by start.
pub fn verify_schedule(schedule: &GateSchedule, gates: &[GateSpec]) -> Result<Vec<Overlap>, GclError> {
    let mut lcm: i128 = 1;
    for g in gates {
        lcm = lcm
            .checked_div(lcm.gcd(&g.period))
            .and_then(|x| x.checked_mul(g.period))
            .ok_or_else(|| GclError::LcmOverflow("beyond i128".into()))?;
    }
    if gates.iter().any(|g| lcm / g.period > MAX_OPENINGS) {
        return Err(GclError::LcmOverflow(lcm.to_string()));
    }
    let h = Q::from(lcm);
    let placed: Vec<Placed> = (0..gates.len()).map(|k| schedule.placed(gates, k)).collect();
    let mut out = Vec::new();
    for i in 0..gates.len() {
        // a gate stretched beyond its period runs into itself
        let pi = &placed[i];
        if pi.length > Q::from(pi.period) {
            for (s, e) in openings(pi, 0, lcm / pi.period) {
                out.push(Overlap { a: gates[i].id.clone(), b: gates[i].id.clone(), start: s + Q::from(pi.period), end: e });
            }
        }
        for j in i + 1..gates.len() {
            if schedule.placements[i].slot != schedule.placements[j].slot {
                continue;
            }
            let pj = &placed[j];
            let mine = openings(pi, 0, lcm / pi.period);
            // the other gate over three hyperperiods so wrap-around is seen
            let n = lcm / pj.period;
            let theirs = openings(pj, -n - 1, 2 * n + 1);
            let mut k = 0;
            for &(s, e) in &mine {
                while k < theirs.len() && theirs[k].1 <= s {
                    k += 1;
                }
                let mut m = k;
                while m < theirs.len() && theirs[m].0 < e {
                    let (lo, hi) = (s.max(theirs[m].0), e.min(theirs[m].1));
                    if lo < hi {
                        out.push(Overlap { a: gates[i].id.clone(), b: gates[j].id.clone(), start: lo, end: hi });
                    }
                    m += 1;
                }
            }
        }
    }
    for o in &mut out {
        // report inside [0, H)
        let shift = (o.start / h).floor() * h;
        o.start -= shift;
        o.end -= shift;
    }
    out.sort_by(|x, y| (x.start, &x.a, &x.b).cmp(&(y.start, &y.a, &y.b)));
    out.dedup();
    Ok(out)
}
