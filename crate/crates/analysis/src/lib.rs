//! End-to-end latency bounds of TSN flows from per-hop network-calculus
//! delays, plus the pipeline around them: simulation cross-checks, gate
//! schedule synthesis, fault-tolerant routing and the CSV reports.

mod bounds;
mod pipeline;
mod report;

pub use bounds::{analyze, with_combo, Analysis, AnalysisOptions, FlowBound, HopTerm, PortClass};
pub use pipeline::{compare, comparison_csv, route, synth_gcl, Comparison, GclRow, GclSynthesis, RouteOutput, Verdict};
pub use report::{bounds_csv, curves_csv, hops_csv};

use tsn_minplus::Q;
use tsn_model::{Mode, Scheduler, TrafficClass};
use tsn_servicecurves::ServiceError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("port {0} carries shaped traffic but has no schedule")]
    NoSchedule(String),
    #[error("routes form a cycle through ports {0:?}")]
    Cyclic(Vec<String>),
    #[error("shrink ratio {0} outside (0, 1]")]
    BadShrink(Q),
    #[error("port {port}, class {class}: {source}")]
    Service { port: String, class: TrafficClass, source: ServiceError },
    #[error("gate synthesis at port {port}: {reason}")]
    Gcl { port: String, reason: String },
    #[error("routing: {0}")]
    Routing(String),
    #[error("simulation: {0}")]
    Sim(#[from] tsn_sim::SimError),
}

/// One scheduler and preemption mode applied to every port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Combo {
    pub scheduler: Scheduler,
    pub mode: Mode,
}

impl Combo {
    pub const ALL: [Combo; 4] = [
        Combo { scheduler: Scheduler::CbsTas, mode: Mode::NonPreemption },
        Combo { scheduler: Scheduler::CbsTas, mode: Mode::Preemption },
        Combo { scheduler: Scheduler::CbsSp, mode: Mode::NonPreemption },
        Combo { scheduler: Scheduler::CbsSp, mode: Mode::Preemption },
    ];

    pub fn label(&self) -> String {
        format!("{}/{}", self.scheduler, self.mode)
    }
}

impl std::fmt::Display for Combo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Shrink ratio written as a decimal (`0.25`) or a fraction (`1/4`).
pub fn parse_ratio(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let (n, d): (i128, i128) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
        return (d != 0).then(|| Q::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) || int.starts_with('-') {
        return None;
    }
    let int: i128 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let den = 10i128.pow(frac.len() as u32);
    let num = if frac.is_empty() { 0 } else { frac.parse::<i128>().ok()? };
    Some(Q::new(int * den + num, den))
}
