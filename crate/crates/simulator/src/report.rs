use crate::trace::fmt_ns;
use crate::SimRun;
use num_traits::Zero;
use tsn_minplus::Q;

/// Measured delays of one flow at one destination. Statistics are `None`
/// when nothing was delivered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayRow {
    pub flow: String,
    pub dst: String,
    pub min: Option<Q>,
    pub mean: Option<Q>,
    pub max: Option<Q>,
    pub jitter: Option<Q>,
    /// Analytical bound, when one is joined in.
    pub bound: Option<Q>,
    pub released: u64,
    pub delivered: u64,
}

impl DelayRow {
    pub fn dropped(&self) -> u64 {
        self.released - self.delivered
    }

    /// Bound present and below the measured maximum.
    pub fn violated(&self) -> bool {
        matches!((self.max, self.bound), (Some(m), Some(b)) if m > b)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DelayReport {
    /// Sorted by flow, then destination.
    pub rows: Vec<DelayRow>,
}

impl DelayReport {
    pub fn row(&self, flow: &str, dst: &str) -> Option<&DelayRow> {
        self.rows.iter().find(|r| r.flow == flow && r.dst == dst)
    }

    pub fn row_mut(&mut self, flow: &str, dst: &str) -> Option<&mut DelayRow> {
        self.rows.iter_mut().find(|r| r.flow == flow && r.dst == dst)
    }

    /// Flows with nothing delivered somewhere.
    pub fn undelivered(&self) -> Vec<&DelayRow> {
        self.rows.iter().filter(|r| r.delivered == 0).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["flow", "dst", "min_ns", "mean_ns", "max_ns", "jitter_ns", "bound_ns", "delivered", "dropped"])
            .expect("in-memory write");
        let f = |x: Option<Q>| x.map(fmt_ns).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.flow.clone(),
                r.dst.clone(),
                f(r.min),
                f(r.mean),
                f(r.max),
                f(r.jitter),
                f(r.bound),
                r.delivered.to_string(),
                r.dropped().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
    }
}

impl SimRun {
    /// End-to-end delay (release to last bit at the destination) per flow and
    /// destination.
    pub fn measure(&self) -> DelayReport {
        let mut rows = Vec::new();
        for (flow, dsts) in &self.destinations {
            let mine: Vec<_> = self.frames.iter().filter(|f| &f.flow == flow).collect();
            for dst in dsts {
                let d: Vec<Q> = mine.iter().filter_map(|f| f.delivered.get(dst).map(|&t| t - f.release)).collect();
                let (min, max) = (d.iter().copied().min(), d.iter().copied().max());
                let mean = (!d.is_empty()).then(|| d.iter().fold(Q::zero(), |a, &b| a + b) / Q::from(d.len() as i128));
                rows.push(DelayRow {
                    flow: flow.clone(),
                    dst: dst.clone(),
                    min,
                    mean,
                    max,
                    jitter: min.zip(max).map(|(a, b)| b - a),
                    bound: None,
                    released: mine.len() as u64,
                    delivered: d.len() as u64,
                });
            }
        }
        rows.sort_by(|a, b| (&a.flow, &a.dst).cmp(&(&b.flow, &b.dst)));
        DelayReport { rows }
    }
}
