//! Index-coded TT frames: a known combination of payloads released together
//! travels as one short frame carrying its code.

use crate::SimError;
use num_traits::One;
use tsn_minplus::Q;
use tsn_model::{IndexTable, MIN_FRAME};

/// Ethernet header and FCS around an index code.
pub const CODE_HEADER_BYTES: u32 = 18;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TtFrame {
    pub flow: String,
    pub seq: u64,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireFrame {
    Plain(TtFrame),
    Indexed { table: String, code: Vec<u8>, seqs: Vec<u64>, wire_bytes: u32 },
}

/// Encodes one indexing window and decodes it again at the destination.
/// Each table takes the first unclaimed frame of each of its flows; on a hit
/// they leave as one indexed frame, on a miss (or a missing flow) they pass
/// through unchanged. Restored frames come back in input order.
pub fn encode_decode_indexed(frames: &[TtFrame], tables: &[IndexTable]) -> Result<(Vec<WireFrame>, Vec<TtFrame>), SimError> {
    for t in tables {
        t.validate().map_err(|e| SimError::IndexTable(format!("{}: {e}", t.id)))?;
    }
    let mut claimed = vec![false; frames.len()];
    let mut wire: Vec<(usize, WireFrame)> = Vec::new();
    for t in tables {
        let picks: Option<Vec<usize>> = t
            .flows
            .iter()
            .map(|f| (0..frames.len()).find(|&i| !claimed[i] && &frames[i].flow == f))
            .collect();
        let Some(picks) = picks else { continue };
        let values: Vec<Vec<u8>> = picks.iter().map(|&i| frames[i].payload.clone()).collect();
        if let Some(row) = t.lookup(&values) {
            for &i in &picks {
                claimed[i] = true;
            }
            let wire_bytes = (CODE_HEADER_BYTES + row.code.len() as u32).max(MIN_FRAME);
            let seqs = picks.iter().map(|&i| frames[i].seq).collect();
            wire.push((picks[0], WireFrame::Indexed { table: t.id.clone(), code: row.code.clone(), seqs, wire_bytes }));
        }
    }
    for (i, f) in frames.iter().enumerate() {
        if !claimed[i] {
            wire.push((i, WireFrame::Plain(f.clone())));
        }
    }
    wire.sort_by_key(|w| w.0);
    let wire: Vec<WireFrame> = wire.into_iter().map(|w| w.1).collect();

    let mut restored: Vec<(usize, TtFrame)> = Vec::new();
    for w in &wire {
        match w {
            WireFrame::Plain(f) => restored.push((frames.iter().position(|x| x == f).expect("sent"), f.clone())),
            WireFrame::Indexed { table, code, seqs, .. } => {
                let t = tables.iter().find(|t| &t.id == table).expect("known table");
                let row = t.decode(code).ok_or_else(|| SimError::IndexTable(format!("{table}: unknown code")))?;
                for ((flow, payload), &seq) in t.flows.iter().zip(&row.values).zip(seqs) {
                    let f = TtFrame { flow: flow.clone(), seq, payload: payload.clone() };
                    let at = frames.iter().position(|x| x.flow == f.flow && x.seq == f.seq).expect("sent");
                    restored.push((at, f));
                }
            }
        }
    }
    restored.sort_by_key(|r| r.0);
    Ok((wire, restored.into_iter().map(|r| r.1).collect()))
}

/// `Σ_{k≥1} r^k = r / (1 − r)`: total extra time saved by shrinking a
/// frame again and again by the ratio `r`.
pub fn shrink_duration_sum(r: Q) -> Result<Q, SimError> {
    if r < Q::from(0) || r >= Q::one() {
        return Err(SimError::IndexTable(format!("ratio {r} outside [0, 1)")));
    }
    Ok(r / (Q::one() - r))
}
