use crate::port::CreditCause;
use std::str::FromStr;
use tsn_minplus::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    SyncPhaseChange,
    GateChange,
    TransmissionEnd,
    PreemptHold,
    FrameArrival,
    TransmissionStart,
    PreemptRelease,
    CreditEvent,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::SyncPhaseChange => "sync-phase-change",
            EventKind::GateChange => "gate-change",
            EventKind::TransmissionEnd => "transmission-end",
            EventKind::PreemptHold => "preempt-hold",
            EventKind::FrameArrival => "frame-arrival",
            EventKind::TransmissionStart => "transmission-start",
            EventKind::PreemptRelease => "preempt-release",
            EventKind::CreditEvent => "credit-event",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub time: Q,
    pub kind: EventKind,
    pub node: String,
    pub port: String,
    pub flow: String,
    pub seq: Option<u64>,
    pub detail: String,
}

impl TraceRow {
    pub fn new(time: Q, kind: EventKind, node: &str, port: &str, flow: &str, seq: Option<u64>, detail: String) -> Self {
        TraceRow { time, kind, node: node.into(), port: port.into(), flow: flow.into(), seq, detail }
    }

    fn key(&self) -> (Q, EventKind, &str, &str, Option<u64>) {
        (self.time, self.kind, &self.port, &self.flow, self.seq)
    }
}

/// Time in ns with three decimals, exact when integral.
pub fn fmt_ns(t: Q) -> String {
    if t.is_integer() {
        t.to_integer().to_string()
    } else {
        let ps = (t * Q::from(1000)).round().to_integer();
        let sign = if ps < 0 { "-" } else { "" };
        format!("{sign}{}.{:03}", ps.abs() / 1000, ps.abs() % 1000)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceLog {
    pub rows: Vec<TraceRow>,
}

impl TraceLog {
    /// Orders rows by time, then event rank, port, flow and sequence. The
    /// sort is stable, so rows equal in all of these keep their order.
    pub fn canonicalize(&mut self) {
        self.rows.sort_by(|a, b| a.key().cmp(&b.key()));
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["time_ns", "event", "node", "port", "flow", "seq", "detail"]).expect("in-memory write");
        for r in &self.rows {
            let seq = r.seq.map(|s| s.to_string()).unwrap_or_default();
            w.write_record([fmt_ns(r.time).as_str(), r.kind.name(), &r.node, &r.port, &r.flow, &seq, &r.detail])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
    }

    /// Credit regime changes of `class` (`"A"` or `"B"`) at `port`, as
    /// `(time, credit, cause)`.
    pub fn credit_events(&self, port: &str, class: &str) -> Vec<(Q, Q, CreditCause)> {
        self.rows
            .iter()
            .filter(|r| r.kind == EventKind::CreditEvent && r.port == port)
            .filter_map(|r| {
                let (c, credit, cause) = parse_credit(&r.detail)?;
                (c == class).then_some((r.time, credit, cause))
            })
            .collect()
    }
}

pub(crate) fn credit_detail(class: &str, credit: Q, cause: CreditCause) -> String {
    format!("class={class};credit={credit};cause={}", cause.as_str())
}

fn parse_credit(d: &str) -> Option<(&str, Q, CreditCause)> {
    let mut it = d.split(';');
    let class = it.next()?.strip_prefix("class=")?;
    let credit = Q::from_str(it.next()?.strip_prefix("credit=")?).ok()?;
    let cause = CreditCause::parse(it.next()?.strip_prefix("cause=")?)?;
    Some((class, credit, cause))
}
