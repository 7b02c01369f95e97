//! Exact event-driven model of one output port with an express lane (TT or
//! CDT), two credit-based shaped lanes (A, B) and a best-effort lane.
//!
//! Rules, shared with the network simulator:
//! * priority is express > A > B > BE; A and B start only with credit >= 0;
//! * a lane starts a frame only if its gate is open and the frame (or, when
//!   preemption is on, a legal fragment of it) finishes before the gate
//!   closes; lanes marked `overrun` only need the gate open at the start;
//! * credit falls at the send slope while the class transmits, is frozen while
//!   an express frame is on the wire or the class cannot start because of its
//!   gate, rises at the idle slope while frames wait or while it is negative,
//!   and is reset to zero when the queue is empty and the credit positive;
//! * with preemption, an express frame interrupts the A/B/BE frame on the
//!   wire at the first legal cut (both parts at least `min_fragment` payload),
//!   and a preemptable frame is cut before its gate closes. A suspended frame
//!   resumes before any other preemptable frame and carries `overhead` extra
//!   bits per resumed fragment.

use crate::{AvbClass, CreditError, Q};
use num_traits::{Signed, Zero};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lane {
    Express = 0,
    A = 1,
    B = 2,
    BE = 3,
}

impl Lane {
    pub const ALL: [Lane; 4] = [Lane::Express, Lane::A, Lane::B, Lane::BE];

    fn avb(self) -> Option<usize> {
        match self {
            Lane::A => Some(0),
            Lane::B => Some(1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preemption {
    Off,
    On { min_fragment: Q, overhead: Q },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub arrival: Q,
    pub lane: Lane,
    pub bits: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortScenario {
    pub rate: Q,
    pub idle_a: Q,
    pub idle_b: Q,
    /// Sorted, disjoint half-open open intervals per lane; `None` is always open.
    pub gates: [Option<Vec<(Q, Q)>>; 4],
    pub overrun: [bool; 4],
    pub frames: Vec<Frame>,
    /// Frame index already on the wire at time 0.
    pub in_flight: Option<usize>,
    pub initial_credit: [Q; 2],
    pub preemption: Preemption,
    pub horizon: Q,
}

impl PortScenario {
    pub fn new(rate: Q, idle_a: Q, idle_b: Q, horizon: Q) -> Self {
        PortScenario {
            rate,
            idle_a,
            idle_b,
            gates: [None, None, None, None],
            overrun: [false; 4],
            frames: vec![],
            in_flight: None,
            initial_credit: [Q::zero(), Q::zero()],
            preemption: Preemption::Off,
            horizon,
        }
    }

    pub fn push(&mut self, arrival: Q, lane: Lane, bits: Q) -> usize {
        self.frames.push(Frame { arrival, lane, bits });
        self.frames.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    IdleGain,
    SendDrain,
    Frozen,
    Reset,
}

impl Cause {
    pub fn as_str(self) -> &'static str {
        match self {
            Cause::IdleGain => "idle-gain",
            Cause::SendDrain => "send-drain",
            Cause::Frozen => "frozen",
            Cause::Reset => "reset",
        }
    }
}

/// Credit value at `time` and the regime that holds until the next event.
/// After `Reset` the credit stays at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CreditEvent {
    pub time: Q,
    pub credit: Q,
    pub cause: Cause,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreditTrace {
    pub class: AvbClass,
    pub idle: Q,
    pub send: Q,
    pub events: Vec<CreditEvent>,
    pub end: Q,
}

impl CreditTrace {
    fn slope(&self, c: Cause) -> Q {
        match c {
            Cause::IdleGain => self.idle,
            Cause::SendDrain => self.send,
            _ => Q::zero(),
        }
    }

    pub fn value_at(&self, t: Q) -> Option<Q> {
        let i = self.events.iter().rposition(|e| e.time <= t)?;
        let e = self.events[i];
        Some(e.credit + self.slope(e.cause) * (t.min(self.end) - e.time))
    }

    pub fn final_value(&self) -> Q {
        self.value_at(self.end).unwrap_or_else(Q::zero)
    }

    pub fn max(&self) -> Q {
        self.events.iter().map(|e| e.credit).fold(self.final_value(), Q::max)
    }

    pub fn min(&self) -> Q {
        self.events.iter().map(|e| e.credit).fold(self.final_value(), Q::min)
    }

    /// Maximal runs `(start, end, cause)`; a reset contributes a zero-length run.
    pub fn runs(&self) -> Vec<(Q, Q, Cause)> {
        let mut out = vec![];
        for (i, e) in self.events.iter().enumerate() {
            let next = self.events.get(i + 1).map_or(self.end, |n| n.time);
            if e.cause == Cause::Reset {
                out.push((e.time, e.time, Cause::Reset));
                if next > e.time {
                    out.push((e.time, next, Cause::Frozen));
                }
            } else {
                out.push((e.time, next, e.cause));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub lane: Lane,
    pub frame: usize,
    pub start: Q,
    pub end: Q,
    /// The frame finished with this segment.
    pub last: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRun {
    pub traces: [CreditTrace; 2],
    pub transmissions: Vec<Transmission>,
}

impl OracleRun {
    pub fn trace(&self, class: AvbClass) -> &CreditTrace {
        match class {
            AvbClass::A => &self.traces[0],
            AvbClass::B => &self.traces[1],
        }
    }

    /// Completion time of every frame, by index.
    pub fn completions(&self, n: usize) -> Vec<Option<Q>> {
        let mut out = vec![None; n];
        for t in self.transmissions.iter().filter(|t| t.last) {
            out[t.frame] = Some(t.end);
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Pending {
    frame: usize,
    left: Q,
    started: bool,
}

#[derive(Debug, Clone)]
struct Segment {
    lane: Lane,
    frame: usize,
    start: Q,
    overhead: Q,
    payload: Q,
    end: Q,
}

struct Port<'a> {
    s: &'a PortScenario,
    queues: [VecDeque<Pending>; 4],
    credit: [Q; 2],
    causes: [Option<Cause>; 2],
    link: Option<Segment>,
    suspended: Option<Lane>,
    events: [Vec<CreditEvent>; 2],
    log: Vec<Transmission>,
}

fn gate_interval(g: &Option<Vec<(Q, Q)>>, t: Q) -> Option<Option<Q>> {
    match g {
        None => Some(None),
        Some(v) => v.iter().find(|&&(a, b)| a <= t && t < b).map(|&(_, b)| Some(b)),
    }
}

impl<'a> Port<'a> {
    fn slopes(&self) -> [(Q, Q); 2] {
        let c = self.s.rate;
        [(self.s.idle_a, self.s.idle_a - c), (self.s.idle_b, self.s.idle_b - c)]
    }

    fn params(&self) -> Option<(Q, Q)> {
        match self.s.preemption {
            Preemption::Off => None,
            Preemption::On { min_fragment, overhead } => Some((min_fragment, overhead)),
        }
    }

    fn preemptable(&self, lane: Lane) -> bool {
        self.params().is_some() && lane != Lane::Express
    }

    /// Time the head of `lane` needs before its gate closes.
    fn need(&self, lane: Lane) -> Option<Q> {
        let h = self.queues[lane as usize].front()?;
        let c = self.s.rate;
        Some(match self.params() {
            Some((m, oh)) if lane != Lane::Express => {
                let o = if h.started { oh } else { Q::zero() };
                if h.left >= m * 2 {
                    (o + m) / c
                } else {
                    (o + h.left) / c
                }
            }
            _ => h.left / c,
        })
    }

    /// Gate admits the head of `lane` at `t` (`strict`: also just after `t`).
    fn admits(&self, lane: Lane, t: Q, strict: bool) -> bool {
        let Some(need) = self.need(lane) else { return false };
        match gate_interval(&self.s.gates[lane as usize], t) {
            None => false,
            Some(None) => true,
            Some(Some(close)) => {
                self.s.overrun[lane as usize] || if strict { t + need < close } else { t + need <= close }
            }
        }
    }

    fn advance(&mut self, from: Q, to: Q) {
        let sl = self.slopes();
        for k in 0..2 {
            let s = match self.causes[k] {
                Some(Cause::IdleGain) => sl[k].0,
                Some(Cause::SendDrain) => sl[k].1,
                _ => Q::zero(),
            };
            self.credit[k] += s * (to - from);
        }
    }

    fn start(&mut self, lane: Lane, t: Q) {
        let c = self.s.rate;
        let h = self.queues[lane as usize].front().unwrap().clone();
        let overhead = match self.params() {
            Some((_, oh)) if h.started => oh,
            _ => Q::zero(),
        };
        let mut end = t + (overhead + h.left) / c;
        if let (true, Some((m, _))) = (self.preemptable(lane), self.params()) {
            if let Some(Some(close)) = gate_interval(&self.s.gates[lane as usize], t) {
                if end > close && !self.s.overrun[lane as usize] {
                    end = close.min(t + (overhead + h.left - m) / c);
                }
            }
        }
        if self.suspended == Some(lane) {
            self.suspended = None;
        }
        self.link = Some(Segment { lane, frame: h.frame, start: t, overhead, payload: h.left, end });
    }

    fn finish(&mut self, t: Q) {
        let seg = self.link.take().unwrap();
        let sent = (t - seg.start) * self.s.rate - seg.overhead;
        let last = sent >= seg.payload;
        self.log.push(Transmission { lane: seg.lane, frame: seg.frame, start: seg.start, end: t, last });
        let q = &mut self.queues[seg.lane as usize];
        if last {
            q.pop_front();
        } else {
            let h = q.front_mut().unwrap();
            h.left -= sent;
            h.started = true;
            self.suspended = Some(seg.lane);
        }
    }

    fn try_start(&mut self, t: Q) -> bool {
        if self.link.is_some() {
            return false;
        }
        if self.admits(Lane::Express, t, false) {
            self.start(Lane::Express, t);
            return true;
        }
        if let Some(l) = self.suspended {
            if self.admits(l, t, false) {
                self.start(l, t);
                return true;
            }
            return false;
        }
        for lane in [Lane::A, Lane::B, Lane::BE] {
            let ok = lane.avb().map_or(true, |k| !self.credit[k].is_negative());
            if ok && self.admits(lane, t, false) {
                self.start(lane, t);
                return true;
            }
        }
        false
    }

    /// Move the end of a preemptable segment forward to the first legal cut
    /// when an express frame is ready.
    fn preempt(&mut self, t: Q) {
        let Some((m, _)) = self.params() else { return };
        let Some(seg) = &self.link else { return };
        if seg.lane == Lane::Express || !self.admits(Lane::Express, t, false) {
            return;
        }
        let c = self.s.rate;
        let cut = t.max(seg.start + (seg.overhead + m) / c);
        let sent = (cut - seg.start) * c - seg.overhead;
        if cut < seg.end && seg.payload - sent >= m {
            self.link.as_mut().unwrap().end = cut;
        }
    }

    fn cause_for(&self, k: usize, t: Q) -> Cause {
        let lane = if k == 0 { Lane::A } else { Lane::B };
        match &self.link {
            Some(s) if s.lane == lane => return Cause::SendDrain,
            Some(s) if s.lane == Lane::Express => return Cause::Frozen,
            _ => {}
        }
        if self.queues[lane as usize].is_empty() {
            if self.credit[k].is_negative() && gate_interval(&self.s.gates[lane as usize], t).is_some() {
                Cause::IdleGain
            } else {
                Cause::Frozen
            }
        } else if self.admits(lane, t, true) {
            Cause::IdleGain
        } else {
            Cause::Frozen
        }
    }

    fn record(&mut self, t: Q) {
        for k in 0..2 {
            let lane = if k == 0 { Lane::A } else { Lane::B };
            let empty = self.queues[lane as usize].is_empty();
            let on_wire = self.link.as_ref().is_some_and(|s| s.lane == lane);
            if empty && !on_wire && self.credit[k].is_positive() {
                self.credit[k] = Q::zero();
                self.events[k].push(CreditEvent { time: t, credit: Q::zero(), cause: Cause::Reset });
                self.causes[k] = Some(Cause::Frozen);
            }
            let c = self.cause_for(k, t);
            if self.causes[k] != Some(c) {
                self.events[k].push(CreditEvent { time: t, credit: self.credit[k], cause: c });
                self.causes[k] = Some(c);
            }
        }
    }

    fn next_event(&self, t: Q, arrivals: &[(Q, usize)], next_arrival: usize) -> Option<Q> {
        let mut cands: Vec<Q> = vec![];
        if let Some(&(a, _)) = arrivals.get(next_arrival) {
            cands.push(a);
        }
        if let Some(s) = &self.link {
            cands.push(s.end);
        }
        for lane in Lane::ALL {
            if let Some(g) = &self.s.gates[lane as usize] {
                cands.extend(g.iter().flat_map(|&(a, b)| [a, b]).filter(|&x| x > t));
            }
            if let (Some(need), Some(Some(close))) = (self.need(lane), gate_interval(&self.s.gates[lane as usize], t)) {
                if !self.s.overrun[lane as usize] {
                    cands.push(close - need);
                }
            }
        }
        let sl = self.slopes();
        for k in 0..2 {
            if self.causes[k] == Some(Cause::IdleGain) && self.credit[k].is_negative() {
                cands.push(t - self.credit[k] / sl[k].0);
            }
        }
        cands.into_iter().filter(|&x| x > t).min()
    }
}

/// Simulate the port and return both credit traces and the wire log.
pub fn run(s: &PortScenario) -> Result<OracleRun, CreditError> {
    if !s.rate.is_positive() {
        return Err(CreditError::ZeroRate);
    }
    for i in [s.idle_a, s.idle_b] {
        if !i.is_positive() {
            return Err(CreditError::NonPositiveIdle);
        }
        if i >= s.rate {
            return Err(CreditError::NonNegativeSend { idle: i, rate: s.rate });
        }
    }
    if s.frames.iter().any(|f| !f.bits.is_positive()) {
        return Err(CreditError::NegativeLength);
    }
    let mut arrivals: Vec<(Q, usize)> = s.frames.iter().enumerate().map(|(i, f)| (f.arrival, i)).collect();
    arrivals.sort();
    let mut port = Port {
        s,
        queues: Default::default(),
        credit: s.initial_credit,
        causes: [None, None],
        link: None,
        suspended: None,
        events: [vec![], vec![]],
        log: vec![],
    };
    let mut next = 0;
    let mut t = Q::zero();
    if let Some(i) = s.in_flight {
        let f = &s.frames[i];
        port.queues[f.lane as usize].push_back(Pending { frame: i, left: f.bits, started: false });
        arrivals.retain(|&(_, j)| j != i);
        port.start(f.lane, t);
    }
    loop {
        if port.link.as_ref().is_some_and(|l| l.end == t) {
            port.finish(t);
        }
        while next < arrivals.len() && arrivals[next].0 <= t {
            let i = arrivals[next].1;
            let f = &s.frames[i];
            port.queues[f.lane as usize].push_back(Pending { frame: i, left: f.bits, started: false });
            next += 1;
        }
        port.try_start(t);
        port.preempt(t);
        if port.link.as_ref().is_some_and(|l| l.end == t) {
            continue;
        }
        port.record(t);
        match port.next_event(t, &arrivals, next) {
            Some(n) if n <= s.horizon => {
                port.advance(t, n);
                t = n;
            }
            _ => {
                port.advance(t, s.horizon);
                break;
            }
        }
    }
    let sl = port.slopes();
    let [ea, eb] = port.events;
    let tr = |class, k: usize, events| CreditTrace { class, idle: sl[k].0, send: sl[k].1, events, end: s.horizon };
    Ok(OracleRun { traces: [tr(AvbClass::A, 0, ea), tr(AvbClass::B, 1, eb)], transmissions: port.log })
}

/// Credit trace of `class` over the scenario.
pub fn credit_trace_oracle(s: &PortScenario, class: AvbClass) -> Result<CreditTrace, CreditError> {
    Ok(run(s)?.trace(class).clone())
}
