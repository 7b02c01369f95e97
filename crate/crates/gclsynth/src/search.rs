use crate::{pair_eta, GclError, Ns, Problem};
use num_integer::Integer;
use tsn_minplus::Q;

pub(crate) struct GridResult {
    pub starts: Vec<Ns>,
    pub slots: Vec<usize>,
    pub eta: Q,
    /// Pair that limits `eta`, when some pair does.
    pub blocking: Option<(usize, usize)>,
}

struct Search<'a> {
    p: &'a Problem,
    cand: Vec<Vec<Ns>>,
    allowed: Vec<Vec<usize>>,
    gcd: Vec<Vec<Ns>>,
    /// `forbid[i][j]`: slot pairs `(s_i, s_j)` that break an exclusion.
    forbid: Vec<Vec<Vec<(usize, usize)>>>,
    cap: Q,
    t: Vec<Ns>,
    s: Vec<usize>,
    best: Option<GridResult>,
}

impl Search<'_> {
    fn slot_ok(&self, k: usize, slot: usize) -> bool {
        (0..k).all(|i| !self.forbid[i][k].contains(&(self.s[i], slot)))
    }

    fn beats(&self, e: Q) -> bool {
        self.best.as_ref().is_none_or(|b| e > b.eta)
    }

    fn done(&self) -> bool {
        self.best.as_ref().is_some_and(|b| b.eta >= self.cap)
    }

    fn dfs(&mut self, k: usize, eta: Q, blocking: Option<(usize, usize)>) {
        let n = self.p.gates.len();
        if k == n {
            if self.beats(eta) {
                self.best = Some(GridResult { starts: self.t.clone(), slots: self.s.clone(), eta, blocking });
            }
            return;
        }
        let gk = &self.p.gates[k];
        for ti in 0..self.cand[k].len() {
            let t = self.cand[k][ti];
            for si in 0..self.allowed[k].len() {
                let slot = self.allowed[k][si];
                if !self.slot_ok(k, slot) {
                    continue;
                }
                let (mut e, mut blk) = (eta, blocking);
                for i in 0..k {
                    if self.s[i] != slot {
                        continue;
                    }
                    let pe = pair_eta(Q::from(self.t[i]), self.p.gates[i].length, Q::from(t), gk.length, self.gcd[i][k]);
                    if pe < e {
                        e = pe;
                        blk = Some((i, k));
                    }
                    if !self.beats(e) {
                        break;
                    }
                }
                if !self.beats(e) {
                    continue;
                }
                self.t[k] = t;
                self.s[k] = slot;
                self.dfs(k + 1, e, blk);
                if self.done() {
                    return;
                }
            }
        }
    }
}

/// Exhaustive branch-and-bound over grid starts and slots. The first optimum
/// met is kept, so ties go to the lexicographically smallest start vector.
pub(crate) fn best_on_grid(p: &Problem) -> Result<GridResult, GclError> {
    let n = p.gates.len();
    let idx = |id: &str| p.gates.iter().position(|g| g.id == id).expect("validated");
    let mut forbid = vec![vec![Vec::new(); n]; n];
    let mut add = |a: usize, b: usize, sa: usize, sb: usize| {
        let (i, j, si, sj) = if a < b { (a, b, sa, sb) } else { (b, a, sb, sa) };
        forbid[i][j].push((si, sj));
    };
    for (a, b) in &p.exclusive {
        for s in 0..p.slots {
            add(idx(a), idx(b), s, s);
        }
    }
    for c in &p.clusters {
        for (a, b) in &c.pairs {
            for &sa in &c.slots {
                for &sb in &c.slots {
                    add(idx(a), idx(b), sa, sb);
                }
            }
        }
    }

    // every gate may start anywhere: shift the first gate to 0
    let free = p.gates.iter().all(|g| g.domain == [(0, g.period)] && g.period % p.step == 0);
    let cand: Vec<Vec<Ns>> = p
        .gates
        .iter()
        .enumerate()
        .map(|(k, g)| {
            if free && k == 0 {
                return vec![0];
            }
            g.domain.iter().flat_map(|&(lo, hi)| (lo..hi).step_by(p.step as usize)).collect()
        })
        .collect();
    let allowed = p.gates.iter().map(|g| if g.slots.is_empty() { (0..p.slots).collect() } else { g.slots.clone() }).collect();
    let gcd = p.gates.iter().map(|a| p.gates.iter().map(|b| a.period.gcd(&b.period)).collect()).collect();
    let cap = p.gates.iter().map(|g| Q::new(g.period, g.length)).fold(p.eta_cap(), Q::min);

    let mut s = Search { p, cand, allowed, gcd, forbid, cap, t: vec![0; n], s: vec![0; n], best: None };
    s.dfs(0, cap, None);
    s.best.ok_or(GclError::NoSlotAssignment)
}
