use crate::context::GateBlock;
use crate::{rotation_staircase, Block, SchedulerContext, ServiceError};
use num_traits::{One, Signed, Zero};
use tsn_credit::credit_bounds;
use tsn_minplus::pl::{Env, Piece, Pl};
use tsn_minplus::{staircase, vertical_deviation, Curve, CurveShape, Q};
use tsn_model::{Mode, Scheduler, TrafficClass};

/// `I · [sup_{u ≤ t} (u - blocked(u) - V/I)]⁺`, where `blocked` is an upper
/// bound on the time the class is kept from earning credit in any interval.
pub fn bracket_service(blocked: &Curve, idle: Q, v_max: Q) -> Result<Curve, ServiceError> {
    let h = blocked.horizon();
    let z = Q::zero();
    let pl = Pl::linear(z, h, z, Q::one())
        .sub(blocked.pl())
        .affine(Q::one(), -v_max / idle)
        .running_sup()
        .envelope(&Pl::constant(z, h, z), Env::Max)
        .affine(idle, z);
    Ok(Curve::from_pl(pl)?)
}

fn constant(v: Q, h: Q) -> Result<Curve, ServiceError> {
    Ok(Curve::make(&CurveShape::LeakyBucket { b: v, r: Q::zero() }, h)?)
}

fn tas(ctx: &SchedulerContext) -> bool {
    ctx.schedule.scheduler == Scheduler::CbsTas
}

fn preemptive(ctx: &SchedulerContext) -> bool {
    ctx.schedule.mode == Mode::Preemption
}

/// TT time charged to one block. The literal forms also fold in the overrun
/// of the block's last frame; otherwise that goes to [`overrun_arrival`].
fn tt_charge(ctx: &SchedulerContext, b: &GateBlock) -> Q {
    if b.tt.is_zero() {
        Q::zero()
    } else if ctx.as_printed {
        ctx.shrink() * (b.tt + ctx.tt_overrun)
    } else {
        ctx.shrink() * b.tt
    }
}

/// Bits of TT frames running past their window ends: at most one frame per
/// window, and never more than the express queue can supply.
fn overrun_arrival(ctx: &SchedulerContext, h: Q) -> Result<Curve, ServiceError> {
    if ctx.as_printed || ctx.tt_overrun.is_zero() || ctx.express.is_none() {
        return Ok(Curve::zero(h));
    }
    let c = ctx.rate();
    let blocks: Vec<Block> = ctx
        .blocks()
        .iter()
        .filter(|b| !b.tt.is_zero())
        .map(|b| Block::new(b.tt_offset + b.tt, c * ctx.shrink() * ctx.tt_overrun))
        .collect();
    let per_window = rotation_staircase(&blocks, ctx.period(), h);
    let supply = ctx.express_arrival(h)?.add(&constant(express_backlog(ctx, h)?, h)?);
    Ok(per_window.min(&supply))
}

/// Time lost by a preemptable class around one gate closing: the fragment
/// that did not fit, plus the continuation overhead when it resumes.
fn preemption_charge(ctx: &SchedulerContext) -> Q {
    ctx.l_oh * 2 + ctx.residue
}

/// Backlog the express queue can hold, in (shrunk) bits.
fn express_backlog(ctx: &SchedulerContext, h: Q) -> Result<Q, ServiceError> {
    if ctx.express.is_none() {
        return Ok(Q::zero());
    }
    let alpha = ctx.express_arrival(h)?;
    let beta = tt_service_curve(ctx, h)?;
    Ok(vertical_deviation(&alpha, &beta)?)
}

/// Express traffic an AVB class can see in an interval: arrivals plus the
/// backlog already queued, plus one continuation overhead per express frame
/// under preemption.
fn express_interference(ctx: &SchedulerContext, h: Q) -> Result<Curve, ServiceError> {
    let alpha = ctx.express_arrival(h)?;
    let b = express_backlog(ctx, h)?;
    let load = alpha.add(&constant(b, h)?);
    match (&ctx.express, preemptive(ctx)) {
        (Some(x), true) if x.min_frame.is_positive() => {
            let per_bit = ctx.rate() * ctx.l_oh / (x.min_frame * ctx.shrink());
            Ok(load.add(&load.scale(per_bit)))
        }
        _ => Ok(load),
    }
}

/// Aggregate interference from scheduled traffic, in bits at link rate.
///
/// - TAS, non-preemption: one staircase charging syn, guard band and TT per block.
/// - TAS, preemption: TT windows only; the syn part is [`syn_overhead_arrival`].
/// - SP, non-preemption: syn plus guard band per syn window, plus the CDT load.
/// - SP, preemption: the CDT load with per-frame overhead; the syn part is
///   [`syn_overhead_arrival`].
pub fn tt_aggregate_arrival(ctx: &SchedulerContext, h: Q) -> Result<Curve, ServiceError> {
    ctx.validate()?;
    let c = ctx.rate();
    let t = ctx.period();
    let np = !preemptive(ctx);
    if tas(ctx) {
        let blocks: Vec<Block> = ctx
            .blocks()
            .iter()
            .map(|b| {
                if np {
                    let mut blk = Block::new(b.start, c * (b.syn + ctx.l_gb + tt_charge(ctx, b)));
                    if ctx.as_printed {
                        blk.delay = ctx.l_gb;
                    }
                    blk
                } else {
                    Block::new(b.tt_offset, c * tt_charge(ctx, b))
                }
            })
            .collect();
        return Ok(rotation_staircase(&blocks, t, h).add(&overrun_arrival(ctx, h)?));
    }
    let load = express_interference(ctx, h)?;
    if np {
        let syn = rotation_staircase(&ctx.syn_blocks(|l| c * (l + ctx.l_gb)), t, h);
        Ok(syn.add(&load))
    } else {
        Ok(load)
    }
}

/// Syn and preemption-overhead charge of a preemptable class, in credit bits
/// (`I^x` times the lost time). Zero without preemption.
pub fn syn_overhead_arrival(ctx: &SchedulerContext, class: TrafficClass, h: Q) -> Result<Curve, ServiceError> {
    ctx.validate()?;
    let idle = ctx.credit(class)?.idle;
    if !preemptive(ctx) {
        return Ok(Curve::zero(h));
    }
    let t = ctx.period();
    let extra = preemption_charge(ctx);
    let blocks: Vec<Block> = if tas(ctx) {
        ctx.blocks()
            .iter()
            .map(|b| {
                let mut blk = Block::new(b.start, idle * (b.syn + extra));
                if ctx.as_printed {
                    // floor form anchored after the TT window
                    blk.delay = b.tt * ctx.shrink() + b.syn + t;
                }
                blk
            })
            .collect()
    } else {
        ctx.syn_blocks(|l| idle * (l + extra))
    };
    Ok(rotation_staircase(&blocks, t, h))
}

/// `C · L · ⌊(t - t_syn) / T⌋`, or the literal `max` form, with `L` the
/// (shrunk) open length per hyperperiod.
fn window_service(ctx: &SchedulerContext, open: Q, h: Q) -> Result<Curve, ServiceError> {
    let c = ctx.rate();
    let t = ctx.period();
    if open > t {
        return Err(ServiceError::TtExceedsPeriod { total: open, period: t });
    }
    let l = open * ctx.shrink();
    if open == t {
        let lat = ctx.t_syn;
        return Ok(Curve::make(&CurveShape::RateLatency { rate: c * ctx.shrink(), latency: lat }, h)?);
    }
    if !ctx.as_printed {
        return Ok(staircase(c * l, t, ctx.t_syn + t, h));
    }
    // C · max(k L, [t - k (T - L)]⁺), k = ⌊(t - t_syn) / T⌋, made non-decreasing
    let z = Q::zero();
    let mut pieces = Vec::new();
    let mut k: i128 = -1;
    loop {
        let a = (ctx.t_syn + t * k).max(z);
        let b = ctx.t_syn + t * (k + 1);
        if b > z && a < h {
            let kq = Q::from(k);
            pieces.push(Piece { start: a, value: (a - kq * (t - l)).max(kq * l), slope: Q::one() });
        }
        if b >= h {
            break;
        }
        k += 1;
    }
    let raw = Pl { lo: z, hi: h, at_lo: z, pieces }
        .envelope(&Pl::constant(z, h, z), Env::Max)
        .running_sup()
        .affine(c, z);
    Ok(Curve::from_pl(raw)?)
}

/// Lower service curve of the express queue.
///
/// Under TAS this is the TT window staircase. Under SP the CDT queue can be
/// held once by a lower frame and then only by syn windows, each of which may
/// also waste up to one CDT frame time in front of it.
pub fn tt_service_curve(ctx: &SchedulerContext, h: Q) -> Result<Curve, ServiceError> {
    ctx.validate()?;
    let t = ctx.period();
    if tas(ctx) {
        let open = ctx.blocks().iter().map(|b| b.tt).fold(Q::zero(), |a, b| a + b);
        if open.is_zero() {
            return Err(ServiceError::NoTtWindows(ctx.schedule.port.to_string()));
        }
        return window_service(ctx, open, h);
    }
    if ctx.as_printed {
        let tt = Q::from(ctx.schedule.total_length(tsn_model::WindowKind::TT));
        let open = if tt.is_positive() { tt } else { t - ctx.l_syn() };
        return window_service(ctx, open, h);
    }
    let c = ctx.rate();
    let cdt_frame = ctx.express.as_ref().map_or_else(Q::zero, |x| x.max_frame * ctx.shrink() / c);
    let lbar = if preemptive(ctx) { ctx.l_oh + ctx.residue } else { ctx.lbar };
    let syn = rotation_staircase(&ctx.syn_blocks(|l| c * (l + cdt_frame)), t, h);
    let blocked = syn.scale(Q::one() / c).add(&constant(lbar, h)?);
    bracket_service(&blocked, c, Q::zero())
}

/// Per-class AVB service curve.
///
/// Non-preemption: `I [t - α_syn+TT(t)/C - V_max/I]⁺`.
/// Preemption: `I [t - α_TT(t)/C - α_syn(t)/I - V_max/I]⁺`.
/// Both take the running supremum of the bracket so the result is a curve.
pub fn avb_service_curve(ctx: &SchedulerContext, class: TrafficClass, h: Q) -> Result<Curve, ServiceError> {
    let p = ctx.credit(class)?;
    let v_max = credit_bounds(p)?.v_max;
    let mut blocked = tt_aggregate_arrival(ctx, h)?.scale(Q::one() / ctx.rate());
    if preemptive(ctx) {
        blocked = blocked.add(&syn_overhead_arrival(ctx, class, h)?.scale(Q::one() / p.idle));
    }
    bracket_service(&blocked, p.idle, v_max)
}

/// The shrink service curve scaled by `1 / r_index`.
pub fn avb_service_curve_amplified(ctx: &SchedulerContext, class: TrafficClass, h: Q) -> Result<Curve, ServiceError> {
    ctx.validate()?;
    let base = avb_service_curve(ctx, class, h)?;
    if ctx.r_index == Q::one() {
        return Ok(base);
    }
    Ok(base.scale(Q::one() / ctx.r_index))
}

/// TT interference when every TT window is stretched by `eta`.
pub fn gcl_scaled_arrival(ctx: &SchedulerContext, eta: Q, h: Q) -> Result<Curve, ServiceError> {
    if eta < Q::one() {
        return Err(ServiceError::BadEta(eta));
    }
    let c = ctx.rate();
    let blocks: Vec<Block> = ctx
        .schedule
        .windows_of(tsn_model::WindowKind::TT)
        .map(|w| Block::new(Q::from(w.offset), c * eta * Q::from(w.length)))
        .collect();
    Ok(rotation_staircase(&blocks, ctx.period(), h))
}

/// `I [t - α^η_TT(t)/C - V_max/I - l̄/C]⁺` with `l̄` (bits) the blocking of
/// one maximum lower frame; `l̄ = 0` drops that term.
pub fn gcl_scaled_service(ctx: &SchedulerContext, eta: Q, class: TrafficClass, lbar: Q, h: Q) -> Result<Curve, ServiceError> {
    let p = ctx.credit(class)?;
    let v_max = credit_bounds(p)?.v_max;
    let c = ctx.rate();
    let blocked = gcl_scaled_arrival(ctx, eta, h)?.scale(Q::one() / c);
    bracket_service(&blocked, p.idle, v_max + p.idle * lbar / c)
}
