use crate::Analysis;
use num_traits::Zero;
use std::collections::BTreeMap;
use tsn_minplus::{Curve, Q};
use tsn_sim::fmt_ns;

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

fn shrink_tag(a: &Analysis) -> String {
    a.shrink.map_or_else(|| "none".into(), |r| r.to_string())
}

/// One row per flow and destination, one bound column per analysis.
/// Best-effort rows leave the bounds empty.
pub fn bounds_csv(analyses: &[Analysis]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["flow".to_string(), "dst".into(), "class".into(), "shrink".into()];
    header.extend(analyses.iter().map(|a| format!("bound_ns[{}/{}]", a.scheduler, a.mode)));
    w.write_record(&header).expect("write to memory");
    let mut rows: BTreeMap<(&str, &str), Vec<String>> = BTreeMap::new();
    for (k, a) in analyses.iter().enumerate() {
        for f in &a.flows {
            let row = rows.entry((&f.flow, &f.dst)).or_insert_with(|| {
                let mut v = vec![f.flow.clone(), f.dst.clone(), f.class.to_string(), shrink_tag(a)];
                v.resize(4 + analyses.len(), String::new());
                v
            });
            row[4 + k] = f.bound.map(|b| b.to_string()).unwrap_or_default();
        }
    }
    for row in rows.values() {
        w.write_record(row).expect("write to memory");
    }
    finish(w)
}

/// The terms behind every bound, hop by hop.
pub fn hops_csv(analyses: &[Analysis]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["flow", "dst", "scheduler", "mode", "shrink", "hop", "port", "t_queue_ns", "d_h_ns", "l_over_c_ns"])
        .expect("write to memory");
    let mut rows = Vec::new();
    for a in analyses {
        for f in &a.flows {
            for (k, h) in f.hops.iter().enumerate() {
                rows.push([
                    f.flow.clone(),
                    f.dst.clone(),
                    a.scheduler.clone(),
                    a.mode.clone(),
                    shrink_tag(a),
                    k.to_string(),
                    h.port.to_string(),
                    h.t_queue.to_string(),
                    h.d_h.to_string(),
                    h.l_over_c.to_string(),
                ]);
            }
        }
    }
    rows.sort_by(|x, y| (&x[0], &x[1]).cmp(&(&y[0], &y[1])));
    for r in rows {
        w.write_record(&r).expect("write to memory");
    }
    finish(w)
}

fn samples(c: &Curve, limit: Q) -> Vec<(Q, Q)> {
    let mut out = Vec::new();
    let segs = c.segments();
    for (k, &(t, v, s)) in segs.iter().enumerate() {
        if t > limit {
            break;
        }
        out.push((t, v));
        let end = segs.get(k + 1).map_or(limit, |n| n.0).min(limit);
        if end > t && !s.is_zero() {
            out.push((end, v + s * (end - t)));
        }
    }
    out.dedup();
    out
}

/// Breakpoints of every arrival and service curve, up to `limit` ns.
pub fn curves_csv(analyses: &[Analysis], limit: Q) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scheduler", "mode", "port", "class", "curve", "t_ns", "bits"]).expect("write to memory");
    for a in analyses {
        for ((port, class), pc) in &a.ports {
            for (name, c) in [("arrival", &pc.arrival), ("service", &pc.service)] {
                for (t, v) in samples(c, limit) {
                    let rec = [&a.scheduler, &a.mode, &port.to_string(), &class.to_string(), name, &fmt_ns(t), &fmt_ns(v)];
                    w.write_record(rec).expect("write to memory");
                }
            }
        }
    }
    finish(w)
}
