use crate::{frame_time, Block, ServiceError};
use num_traits::{One, Pow, Zero};
use tsn_credit::CreditParams;
use tsn_minplus::{Curve, Q};
use tsn_model::{Mode, Model, PortId, PortSchedule, Scheduler, TrafficClass, WindowKind, MAX_FRAME};

/// Continuation overhead of a resumed fragment, in bytes.
pub const OVERHEAD_BYTES: u32 = 24;
/// Smallest payload a fragment may carry, in bytes.
pub const MIN_FRAGMENT_BYTES: u32 = 64;

/// TT (under TAS) or CDT (under SP) traffic entering the port.
#[derive(Debug, Clone)]
pub struct ExpressLoad {
    pub arrival: Curve,
    /// bits
    pub max_frame: Q,
    /// bits
    pub min_frame: Q,
}

/// Everything the curve builders need to know about one output port.
/// All lengths are ns.
#[derive(Debug, Clone)]
pub struct SchedulerContext {
    pub schedule: PortSchedule,
    pub credit_a: CreditParams,
    pub credit_b: CreditParams,
    /// Time a class may sit frozen before a gate closing (non-preemption).
    pub l_gb: Q,
    /// Preemption overhead window.
    pub l_oh: Q,
    /// Longest first fragment a preemptable frame needs before a closing.
    pub residue: Q,
    /// Largest non-express frame time at the port.
    pub lbar: Q,
    pub t_syn: Q,
    /// How far a TT frame may run past the end of its window.
    pub tt_overrun: Q,
    pub express: Option<ExpressLoad>,
    pub r_index: Q,
    pub z: u32,
    /// Use the literal max-form curves (overrun folded into each block, guard
    /// band as a delay) instead of the sound ones. Compatibility only.
    pub as_printed: bool,
}

/// One syn window, optionally followed by a TT window starting where it ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct GateBlock {
    pub start: Q,
    pub syn: Q,
    pub tt_offset: Q,
    pub tt: Q,
}

impl SchedulerContext {
    /// Context with defaults that do not depend on the traffic: a full MTU
    /// guard band, a 24 B overhead window, no TT overrun and no shrink.
    pub fn new(schedule: PortSchedule, credit_a: CreditParams, credit_b: CreditParams) -> Self {
        let rate = schedule.rate;
        let longest = |k| schedule.windows_of(k).map(|w| Q::from(w.length)).max().unwrap_or_else(Q::zero);
        let l_gb = longest(WindowKind::GuardBand).max(frame_time(MAX_FRAME, rate));
        let l_oh = longest(WindowKind::Overhead).max(frame_time(OVERHEAD_BYTES, rate));
        let mut ctx = SchedulerContext {
            credit_a,
            credit_b,
            l_gb,
            l_oh,
            residue: frame_time(2 * MIN_FRAGMENT_BYTES - 1, rate),
            lbar: frame_time(MAX_FRAME, rate),
            t_syn: Q::zero(),
            tt_overrun: Q::zero(),
            express: None,
            r_index: Q::one(),
            z: 1,
            as_printed: false,
            schedule,
        };
        ctx.t_syn = ctx.blocks().iter().find(|b| b.tt > Q::zero()).map_or_else(Q::zero, |b| b.syn);
        ctx
    }

    /// Context for `port` of `model`, with frame maxima taken from the flows
    /// crossing it. The express load is the sum of the source arrival curves,
    /// which is only exact at the first hop; callers that propagate curves
    /// should overwrite it.
    pub fn from_model(model: &Model, port: &PortId, horizon: Q) -> Result<Self, ServiceError> {
        let schedule = model.schedules.get(port).ok_or_else(|| ServiceError::NoSchedule(port.to_string()))?.clone();
        let rate = schedule.rate;
        let largest = |classes: &[TrafficClass]| {
            model.flows_at(port).filter(|f| classes.contains(&f.class)).map(|f| f.size_bytes).max().unwrap_or(0)
        };
        let bits = |bytes: u32| Q::from(8 * bytes as i128);
        let (la, lb, lbe) = (largest(&[TrafficClass::A]), largest(&[TrafficClass::B]), largest(&[TrafficClass::BE]));
        let express = [TrafficClass::TT, TrafficClass::CDT];
        let lx = largest(&express);

        // under SP with preemption a lower frame that blocks an AVB class may
        // itself be cut by CDT and come back with the continuation overhead
        let oh = bits(OVERHEAD_BYTES);
        let cut = |l: u32| {
            let b = bits(l);
            if l > 0 && schedule.scheduler == Scheduler::CbsSp && schedule.mode == Mode::Preemption {
                b + oh
            } else {
                b
            }
        };
        let credit_a = CreditParams::class_a(schedule.idle_slope_a, rate, bits(la), cut(lb), cut(lbe))?;
        let credit_b = CreditParams::class_b(schedule.idle_slope_b, rate, bits(lb), cut(lbe), &credit_a)?;

        let mut ctx = SchedulerContext::new(schedule, credit_a, credit_b);
        let lower = la.max(lb).max(lbe);
        ctx.lbar = frame_time(lower, rate);
        if lower > 0 {
            ctx.residue = frame_time(lower.min(2 * MIN_FRAGMENT_BYTES - 1), rate);
        }
        if ctx.schedule.scheduler == Scheduler::CbsTas {
            ctx.tt_overrun = frame_time(lx, rate);
        }
        let xs: Vec<_> = model.flows_at(port).filter(|f| express.contains(&f.class)).collect();
        if !xs.is_empty() {
            let arrival = xs.iter().fold(Curve::zero(horizon), |acc, f| acc.add(&tsn_model::flow_arrival_curve(f, horizon)));
            let min = xs.iter().map(|f| f.size_bytes).min().unwrap_or(0);
            ctx.express = Some(ExpressLoad { arrival, max_frame: bits(lx), min_frame: bits(min) });
        }
        Ok(ctx)
    }

    pub fn rate(&self) -> Q {
        self.schedule.rate
    }

    pub fn period(&self) -> Q {
        Q::from(self.schedule.hyperperiod)
    }

    /// `r_index^z`, the factor applied to TT lengths under shrink.
    pub fn shrink(&self) -> Q {
        Pow::pow(self.r_index, self.z)
    }

    pub fn credit(&self, class: TrafficClass) -> Result<&CreditParams, ServiceError> {
        match class {
            TrafficClass::A => Ok(&self.credit_a),
            TrafficClass::B => Ok(&self.credit_b),
            c => Err(ServiceError::NotAvb(c)),
        }
    }

    /// Total syn length per hyperperiod.
    pub fn l_syn(&self) -> Q {
        Q::from(self.schedule.total_length(WindowKind::Syn))
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.r_index <= Q::zero() || self.r_index > Q::one() {
            return Err(ServiceError::BadShrink(self.r_index));
        }
        if self.schedule.mode == Mode::NonPreemption && self.l_gb < self.lbar {
            return Err(ServiceError::GuardTooShort { l_gb: self.l_gb, frame: self.lbar });
        }
        Ok(())
    }

    /// Syn windows with the TT window that starts where each ends, plus TT
    /// windows that have no syn window in front. Sorted by start.
    pub(crate) fn blocks(&self) -> Vec<GateBlock> {
        let syn: Vec<_> = self.schedule.windows_of(WindowKind::Syn).collect();
        let tt: Vec<_> = self.schedule.windows_of(WindowKind::TT).collect();
        let mut out = Vec::new();
        for s in &syn {
            let next = tt.iter().find(|w| w.offset == s.end());
            out.push(GateBlock {
                start: Q::from(s.offset),
                syn: Q::from(s.length),
                tt_offset: Q::from(s.end()),
                tt: next.map_or_else(Q::zero, |w| Q::from(w.length)),
            });
        }
        for w in &tt {
            if !syn.iter().any(|s| s.end() == w.offset) {
                out.push(GateBlock { start: Q::from(w.offset), syn: Q::zero(), tt_offset: Q::from(w.offset), tt: Q::from(w.length) });
            }
        }
        out.sort_by(|a, b| a.start.cmp(&b.start));
        out
    }

    /// Express arrival curve on `[0, h]` scaled by the shrink factor; zero when
    /// the port carries no express traffic.
    pub(crate) fn express_arrival(&self, h: Q) -> Result<Curve, ServiceError> {
        match &self.express {
            Some(x) => Ok(x.arrival.truncate(h)?.scale(self.shrink())),
            None => Ok(Curve::zero(h)),
        }
    }

    /// Per-window syn blocks used under SP: `(offset, length)` of each syn window.
    pub(crate) fn syn_blocks(&self, cost: impl Fn(Q) -> Q) -> Vec<Block> {
        self.schedule
            .windows_of(WindowKind::Syn)
            .map(|w| Block::new(Q::from(w.offset), cost(Q::from(w.length))))
            .collect()
    }
}
