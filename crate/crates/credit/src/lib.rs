//! Credit-based shaper timing: credit extrema, phase durations, the
//! intersection and zero-crossing geometry of the A/B credit lines, and an
//! exact event-driven credit trace used as an oracle for all of them.
//!
//! Units: time in ns, amounts in bits, slopes in bits/ns, all exact rationals.
//! Send slopes are negative (`S = I - C`); phase durations are positive.

mod bounds;
mod geometry;
pub mod oracle;
pub mod scenarios;

pub use bounds::{credit_bounds, phase_times, AvbClass, CreditBounds, CreditParams, HigherClass, PhaseTimes};
pub use geometry::{
    credit_geometry, crosses_at_midpoint, idle_time_difference, intersection, send_time_difference, send_vs_idle_a, send_vs_idle_b,
    t_eq_literal, zero_crossing, Geometry, GeometryAnchors, ZeroCrossing,
};
pub use oracle::{credit_trace_oracle, Cause, CreditEvent, CreditTrace};

pub use tsn_minplus::Q;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CreditError {
    #[error("link rate must be positive")]
    ZeroRate,
    #[error("idle slope must be positive")]
    NonPositiveIdle,
    #[error("send slope must be negative (idle slope {idle} reaches link rate {rate})")]
    NonNegativeSend { idle: Q, rate: Q },
    #[error("send slope {send} differs from idle slope minus link rate")]
    SlopeMismatch { send: Q },
    #[error("frame lengths must be non-negative")]
    NegativeLength,
    #[error("class B bounds need the class A parameters")]
    MissingHigherClass,
    #[error("extrema must satisfy V_max >= 0 >= V_min")]
    BadExtrema,
    #[error("credit lines are parallel")]
    Parallel,
    #[error("segment does not change sign")]
    NoSignChange,
    #[error("segment end must lie after its start")]
    DegenerateSegment,
}
