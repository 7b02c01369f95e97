//! Arrival patterns that drive the credit of a class to its extrema.

use crate::oracle::{Lane, PortScenario};
use crate::{credit_bounds, CreditError, CreditParams, Q};
use num_traits::{Signed, Zero};

/// Frame lengths (bits) of the three shaped/unshaped classes at a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lengths {
    pub a: Q,
    pub b: Q,
    pub be: Q,
}

/// Queue frames of `lane` at time 0 that spend exactly `credit` at send
/// slope `send`, in pieces of at most `cap` bits, then one `last` frame.
fn drain_then(s: &mut PortScenario, lane: Lane, credit: Q, send: Q, cap: Q, last: Q) {
    let mut bits = credit * s.rate / send.abs();
    while bits.is_positive() {
        let piece = bits.min(cap);
        s.push(Q::zero(), lane, piece);
        bits -= piece;
    }
    s.push(Q::zero(), lane, last);
}

fn horizon(s: &PortScenario) -> Q {
    let total: Q = s.frames.iter().map(|f| f.bits).fold(Q::zero(), |a, b| a + b);
    total / s.rate * 4 + Q::from(1)
}

/// Class A waits behind the largest lower-priority frame, then spends its
/// credit down to exactly zero and sends a maximum frame.
pub fn worst_case_a(rate: Q, idle_a: Q, idle_b: Q, l: Lengths) -> Result<(PortScenario, CreditParams), CreditError> {
    let pa = CreditParams::class_a(idle_a, rate, l.a, l.b, l.be)?;
    let bounds = credit_bounds(&pa)?;
    let mut s = PortScenario::new(rate, idle_a, idle_b, Q::zero());
    let blocker = if l.b > l.be { Lane::B } else { Lane::BE };
    let i = s.push(Q::zero(), blocker, pa.interfering);
    s.in_flight = Some(i);
    drain_then(&mut s, Lane::A, bounds.v_max, pa.send, l.a, l.a);
    s.horizon = horizon(&s);
    Ok((s, pa))
}

/// Both classes wait behind a BE frame; class A spends its credit to zero and
/// sends a maximum frame, then class B does the same.
pub fn worst_case_b(rate: Q, idle_a: Q, idle_b: Q, l: Lengths) -> Result<(PortScenario, CreditParams, CreditParams), CreditError> {
    let pa = CreditParams::class_a(idle_a, rate, l.a, l.b, l.be)?;
    let pb = CreditParams::class_b(idle_b, rate, l.b, l.be, &pa)?;
    let mut s = PortScenario::new(rate, idle_a, idle_b, Q::zero());
    let i = s.push(Q::zero(), Lane::BE, l.be);
    s.in_flight = Some(i);
    let va = pa.idle * l.be / rate;
    drain_then(&mut s, Lane::A, va, pa.send, l.a, l.a);
    let vb = credit_bounds(&pb)?.v_max;
    let reached = pb.idle * (l.be / rate + va / pa.send.abs() + l.a / rate);
    drain_then(&mut s, Lane::B, if l.b <= l.be { vb } else { reached }, pb.send, l.b, l.b);
    s.horizon = horizon(&s);
    Ok((s, pa, pb))
}
