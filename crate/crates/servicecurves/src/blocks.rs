use num_traits::Zero;
use tsn_minplus::{staircase, Curve, Q};

/// A periodic charge of `cost` bits starting at `offset` within the hyperperiod.
/// `delay` moves the first step later without changing the phasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: Q,
    pub cost: Q,
    pub delay: Q,
}

impl Block {
    pub fn new(offset: Q, cost: Q) -> Self {
        Block { offset, cost, delay: Q::zero() }
    }
}

fn rem(x: Q, period: Q) -> Q {
    x - period * (x / period).floor()
}

/// `max_i Σ_j cost_j · ⌈(t - O_ji - delay_j) / T⌉⁺` with `O_ji = (o_j - o_i) mod T`:
/// the largest charge an interval of length `t` can collect when it starts at
/// one of the blocks.
pub fn rotation_staircase(blocks: &[Block], period: Q, h: Q) -> Curve {
    let mut best: Option<Curve> = None;
    for bi in blocks {
        let sum = blocks
            .iter()
            .filter(|b| !b.cost.is_zero())
            .map(|bj| staircase(bj.cost, period, rem(bj.offset - bi.offset, period) + bj.delay, h))
            .fold(Curve::zero(h), |acc, c| acc.add(&c));
        best = Some(match best {
            Some(b) => b.max(&sum),
            None => sum,
        });
    }
    best.unwrap_or_else(|| Curve::zero(h))
}
