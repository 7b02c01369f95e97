//! One output port: an express lane (TT or CDT), the two credit-shaped AVB
//! lanes and best effort.
//!
//! A and B start only with credit ≥ 0, and only below the express lane. A lane
//! starts a frame when its gate is open and the frame, or with preemption a
//! legal fragment of it, ends before the gate closes. Lanes with `overrun`
//! only need the gate open at the start. Credit drains at the send slope
//! while its class transmits. It is frozen while an express frame is on the
//! wire or the gate keeps the class from starting. Otherwise it rises at the
//! idle slope while frames wait or the credit is negative, and is reset to
//! zero once the queue empties with positive credit.

use crate::gate::Gate;
use num_traits::{Signed, Zero};
use std::collections::VecDeque;
use tsn_minplus::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Lane {
    Express = 0,
    A = 1,
    B = 2,
    BE = 3,
}

impl Lane {
    pub const ALL: [Lane; 4] = [Lane::Express, Lane::A, Lane::B, Lane::BE];

    pub fn name(self) -> &'static str {
        match self {
            Lane::Express => "express",
            Lane::A => "A",
            Lane::B => "B",
            Lane::BE => "BE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreditCause {
    IdleGain,
    SendDrain,
    Frozen,
    Reset,
}

impl CreditCause {
    pub fn as_str(self) -> &'static str {
        match self {
            CreditCause::IdleGain => "idle-gain",
            CreditCause::SendDrain => "send-drain",
            CreditCause::Frozen => "frozen",
            CreditCause::Reset => "reset",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::IdleGain, Self::SendDrain, Self::Frozen, Self::Reset].into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preemption {
    pub min_fragment_bits: Q,
    pub overhead_bits: Q,
}

#[derive(Debug, Clone)]
struct Pending {
    frame: usize,
    left: Q,
    started: bool,
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub lane: Lane,
    pub frame: usize,
    pub start: Q,
    pub overhead: Q,
    pub payload: Q,
    pub end: Q,
    /// Continues a held frame.
    pub resumed: bool,
}

/// What a finished segment did.
#[derive(Debug, Clone)]
pub struct Finished {
    pub lane: Lane,
    pub frame: usize,
    pub start: Q,
    pub last: bool,
}

#[derive(Debug, Clone)]
pub struct Port {
    pub rate: Q,
    idle: [Q; 2],
    pub gates: [Gate; 4],
    pub overrun: [bool; 4],
    pub preemption: Option<Preemption>,
    queues: [VecDeque<Pending>; 4],
    credit: [Q; 2],
    causes: [Option<CreditCause>; 2],
    pub link: Option<Segment>,
    suspended: Option<Lane>,
}

impl Port {
    pub fn new(rate: Q, idle_a: Q, idle_b: Q, gates: [Gate; 4], overrun: [bool; 4], preemption: Option<Preemption>) -> Self {
        Port {
            rate,
            idle: [idle_a, idle_b],
            gates,
            overrun,
            preemption,
            queues: Default::default(),
            credit: [Q::zero(), Q::zero()],
            causes: [None, None],
            link: None,
            suspended: None,
        }
    }

    fn avb(lane: Lane) -> Option<usize> {
        match lane {
            Lane::A => Some(0),
            Lane::B => Some(1),
            _ => None,
        }
    }

    pub fn idle(&self) -> bool {
        self.link.is_none() && self.queues.iter().all(VecDeque::is_empty)
    }

    pub fn enqueue(&mut self, lane: Lane, frame: usize, bits: Q) {
        self.queues[lane as usize].push_back(Pending { frame, left: bits, started: false });
    }

    fn need(&self, lane: Lane) -> Option<Q> {
        let h = self.queues[lane as usize].front()?;
        let c = self.rate;
        Some(match self.preemption {
            Some(p) if lane != Lane::Express => {
                let o = if h.started { p.overhead_bits } else { Q::zero() };
                let m = p.min_fragment_bits;
                if h.left >= m * Q::from(2) {
                    (o + m) / c
                } else {
                    (o + h.left) / c
                }
            }
            _ => h.left / c,
        })
    }

    fn admits(&self, lane: Lane, t: Q, strict: bool) -> bool {
        let Some(need) = self.need(lane) else { return false };
        match self.gates[lane as usize].open_until(t) {
            None => false,
            Some(None) => true,
            Some(Some(close)) => self.overrun[lane as usize] || if strict { t + need < close } else { t + need <= close },
        }
    }

    pub fn advance(&mut self, from: Q, to: Q) {
        for k in 0..2 {
            let s = match self.causes[k] {
                Some(CreditCause::IdleGain) => self.idle[k],
                Some(CreditCause::SendDrain) => self.idle[k] - self.rate,
                _ => Q::zero(),
            };
            self.credit[k] += s * (to - from);
        }
    }

    fn start(&mut self, lane: Lane, t: Q) {
        let c = self.rate;
        let h = self.queues[lane as usize].front().expect("head exists").clone();
        let overhead = match self.preemption {
            Some(p) if h.started => p.overhead_bits,
            _ => Q::zero(),
        };
        let mut end = t + (overhead + h.left) / c;
        if let (Some(p), true) = (self.preemption, lane != Lane::Express) {
            if let Some(Some(close)) = self.gates[lane as usize].open_until(t) {
                if end > close && !self.overrun[lane as usize] {
                    end = close.min(t + (overhead + h.left - p.min_fragment_bits) / c);
                }
            }
        }
        if self.suspended == Some(lane) {
            self.suspended = None;
        }
        self.link = Some(Segment { lane, frame: h.frame, start: t, overhead, payload: h.left, end, resumed: h.started });
    }

    /// Ends the segment on the wire; a frame cut short stays at the head of
    /// its queue and is resumed first.
    pub fn finish(&mut self, t: Q) -> Finished {
        let seg = self.link.take().expect("segment on the wire");
        let sent = (t - seg.start) * self.rate - seg.overhead;
        let last = sent >= seg.payload;
        let q = &mut self.queues[seg.lane as usize];
        if last {
            q.pop_front();
        } else {
            let h = q.front_mut().expect("held frame");
            h.left -= sent;
            h.started = true;
            self.suspended = Some(seg.lane);
        }
        Finished { lane: seg.lane, frame: seg.frame, start: seg.start, last }
    }

    pub fn ends_at(&self, t: Q) -> bool {
        self.link.as_ref().is_some_and(|l| l.end == t)
    }

    /// Starts the next frame if the wire is free; returns the new segment.
    pub fn try_start(&mut self, t: Q) -> Option<&Segment> {
        if self.link.is_some() {
            return None;
        }
        let lane = if self.admits(Lane::Express, t, false) {
            Some(Lane::Express)
        } else if let Some(l) = self.suspended {
            self.admits(l, t, false).then_some(l)
        } else {
            [Lane::A, Lane::B, Lane::BE].into_iter().find(|&l| {
                Self::avb(l).is_none_or(|k| !self.credit[k].is_negative()) && self.admits(l, t, false)
            })
        };
        self.start(lane?, t);
        self.link.as_ref()
    }

    /// Pulls the end of a preemptable segment forward to the first legal cut
    /// when an express frame is ready. Returns the new end.
    pub fn preempt(&mut self, t: Q) -> Option<Q> {
        let p = self.preemption?;
        let seg = self.link.as_ref()?;
        if seg.lane == Lane::Express || !self.admits(Lane::Express, t, false) {
            return None;
        }
        let c = self.rate;
        let m = p.min_fragment_bits;
        let cut = t.max(seg.start + (seg.overhead + m) / c);
        let sent = (cut - seg.start) * c - seg.overhead;
        if cut < seg.end && seg.payload - sent >= m {
            self.link.as_mut().expect("checked").end = cut;
            return Some(cut);
        }
        None
    }

    fn cause_for(&self, k: usize, t: Q) -> CreditCause {
        let lane = if k == 0 { Lane::A } else { Lane::B };
        match &self.link {
            Some(s) if s.lane == lane => return CreditCause::SendDrain,
            Some(s) if s.lane == Lane::Express => return CreditCause::Frozen,
            _ => {}
        }
        if self.queues[lane as usize].is_empty() {
            if self.credit[k].is_negative() && self.gates[lane as usize].open_until(t).is_some() {
                CreditCause::IdleGain
            } else {
                CreditCause::Frozen
            }
        } else if self.admits(lane, t, true) {
            CreditCause::IdleGain
        } else {
            CreditCause::Frozen
        }
    }

    /// Settles both credits at `t`; returns `(lane, credit, cause)` for every
    /// change of regime.
    pub fn record(&mut self, t: Q) -> Vec<(Lane, Q, CreditCause)> {
        let mut out = Vec::new();
        for k in 0..2 {
            let lane = if k == 0 { Lane::A } else { Lane::B };
            let empty = self.queues[lane as usize].is_empty();
            let on_wire = self.link.as_ref().is_some_and(|s| s.lane == lane);
            if empty && !on_wire && self.credit[k].is_positive() {
                self.credit[k] = Q::zero();
                out.push((lane, Q::zero(), CreditCause::Reset));
                self.causes[k] = Some(CreditCause::Frozen);
            }
            let c = self.cause_for(k, t);
            if self.causes[k] != Some(c) {
                out.push((lane, self.credit[k], c));
                self.causes[k] = Some(c);
            }
        }
        out
    }

    /// Next time this port's state can change on its own.
    pub fn next_event(&self, t: Q) -> Option<Q> {
        let mut best: Option<Q> = None;
        let mut offer = |x: Q| {
            if x > t && best.is_none_or(|b| x < b) {
                best = Some(x);
            }
        };
        if let Some(s) = &self.link {
            offer(s.end);
        }
        for lane in Lane::ALL {
            if let Some(x) = self.gates[lane as usize].next_change(t) {
                offer(x);
            }
            if let (Some(need), Some(Some(close))) = (self.need(lane), self.gates[lane as usize].open_until(t)) {
                if !self.overrun[lane as usize] {
                    offer(close - need);
                }
            }
        }
        for k in 0..2 {
            if self.causes[k] == Some(CreditCause::IdleGain) && self.credit[k].is_negative() {
                offer(t - self.credit[k] / self.idle[k]);
            }
        }
        best
    }
}
