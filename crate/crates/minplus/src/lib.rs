//! Min-plus network calculus on finite-horizon piecewise-linear curves.
//!
//! Time is measured in nanoseconds and amounts in bits. Every quantity is an
//! exact rational, so breakpoints produced by intersections stay exact and
//! zero crossings can be compared with `==`.
//!
//! ```
//! use tsn_minplus::{Curve, CurveShape, Q, horizontal_deviation};
//! let h = Q::from(10_000_000);
//! let alpha = Curve::make(&CurveShape::LeakyBucket { b: Q::from(90_000), r: Q::new(1, 50) }, h).unwrap();
//! let beta = Curve::make(&CurveShape::RateLatency { rate: Q::new(3, 50), latency: Q::from(100_000) }, h).unwrap();
//! assert_eq!(horizontal_deviation(&alpha, &beta).unwrap(), Q::from(1_600_000));
//! ```

mod curve;
mod ops;
pub mod pl;

pub use curve::{big, staircase, Curve, CurveShape};
pub use ops::{convolve, deconvolve, horizontal_deviation, output_bound, vertical_deviation};

/// Exact rational used for times (ns), amounts (bits) and rates (bits/ns).
pub type Q = num_rational::Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurveError {
    #[error("horizon must be positive")]
    NonPositiveHorizon,
    #[error("parameter `{0}` must be non-negative")]
    NegativeParameter(&'static str),
    #[error("invalid curve: {0}")]
    Invalid(String),
    #[error("t={t} is outside [0, {horizon}]")]
    BeyondHorizon { t: Q, horizon: Q },
    #[error("{op}: horizon exhausted ({detail})")]
    HorizonExhausted { op: &'static str, detail: String },
    #[error("empty curve")]
    Empty,
}

/// Rounds a non-negative rational up to whole nanoseconds.
pub fn ceil_ns(t: Q) -> i128 {
    t.ceil().to_integer()
}

/// Lossy conversion for reports.
pub fn to_f64(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}
