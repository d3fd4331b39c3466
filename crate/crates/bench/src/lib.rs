//! Fixtures shared by the criterion benches.

use anchorpath::{AgvId, Interval};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One gap-tree operation.
#[derive(Clone, Copy, Debug)]
pub enum TreeOp {
    Insert(AgvId, Interval),
    Remove(AgvId, Interval),
    Query(AgvId, Interval),
}

/// Seeded mix of inserts, removes and gap queries over `[0, horizon)`.
pub fn tree_ops(count: usize, horizon: u64, agvs: u32, seed: u64) -> Vec<TreeOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let agv = AgvId(rng.gen_range(0..agvs));
            let start = rng.gen_range(0..horizon - 1);
            let end = rng.gen_range(start + 1..=horizon.min(start + horizon / 10 + 1));
            let ivl = Interval::new(start, end);
            match rng.gen_range(0..3) {
                0 => TreeOp::Insert(agv, ivl),
                1 => TreeOp::Remove(agv, ivl),
                _ => TreeOp::Query(agv, ivl),
            }
        })
        .collect()
}
