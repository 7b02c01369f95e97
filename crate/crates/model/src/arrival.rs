use crate::{FlowSpec, PortId, TrafficClass};
use tsn_minplus::{Curve, CurveShape, Q};

/// Leaky bucket with a one-frame burst: `b = 8·size`, `r = 8·size / period`.
pub fn flow_arrival_curve(flow: &FlowSpec, horizon: Q) -> Curve {
    let b = Q::from(flow.size_bits());
    let r = b / Q::from(flow.period_ns);
    Curve::make(&CurveShape::LeakyBucket { b, r }, horizon).expect("validated flow gives a valid leaky bucket")
}

/// Sum of the source arrival curves of every `class` flow routed through `port`.
/// The zero curve when there are none.
pub fn class_aggregate<'a>(
    flows: impl IntoIterator<Item = &'a FlowSpec>,
    class: TrafficClass,
    port: &PortId,
    horizon: Q,
) -> Curve {
    flows
        .into_iter()
        .filter(|f| f.class == class && f.ports().contains(port))
        .fold(Curve::zero(horizon), |acc, f| acc.add(&flow_arrival_curve(f, horizon)))
}
