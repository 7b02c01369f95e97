//! Arrival and service curves of a TSN output port running CBS under a
//! time-aware (TAS) or strict-priority (SP) scheduler, with and without frame
//! preemption.
//!
//! Units follow the model: time in ns, amounts in bits, rates in bits/ns.
//!
//! Gate semantics shared with the simulator:
//! - under TAS only the TT lane is open inside TT windows, and no lane is open
//!   inside syn windows;
//! - guard-band windows do not close any gate, they only mark the stretch in
//!   which a frame that cannot finish before the next closing must wait;
//! - under SP the TT windows are ignored and TT flows are served as CDT with
//!   strict priority; syn windows still close every lane.

mod blocks;
mod context;
mod curves;

pub use blocks::{rotation_staircase, Block};
pub use context::{ExpressLoad, SchedulerContext};
pub use curves::{
    avb_service_curve, avb_service_curve_amplified, bracket_service, gcl_scaled_arrival, gcl_scaled_service,
    syn_overhead_arrival, tt_aggregate_arrival, tt_service_curve,
};

use tsn_credit::CreditError;
use tsn_minplus::{CurveError, Q};
use tsn_model::TrafficClass;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("no schedule for port {0}")]
    NoSchedule(String),
    #[error("{0:?} is not an AVB class")]
    NotAvb(TrafficClass),
    #[error("port {0} has no TT windows")]
    NoTtWindows(String),
    #[error("TT windows of {total} ns exceed the hyperperiod {period} ns")]
    TtExceedsPeriod { total: Q, period: Q },
    #[error("shrink ratio {0} outside (0, 1]")]
    BadShrink(Q),
    #[error("amplified curves need a shrink ratio below 1, got {0}")]
    NotShrunk(Q),
    #[error("scale factor {0} below 1")]
    BadEta(Q),
    #[error("guard band {l_gb} ns shorter than the largest interfering frame {frame} ns")]
    GuardTooShort { l_gb: Q, frame: Q },
    #[error(transparent)]
    Credit(#[from] CreditError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Frame time in ns of `bytes` at `rate` bits/ns.
pub fn frame_time(bytes: u32, rate: Q) -> Q {
    Q::from(8 * bytes as i128) / rate
}
