//! Seeded random streams and order-fixed parallel reductions.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by
//! `(seed, stream)`. Parallel work is split into blocks whose results are
//! combined in block-index order, so outputs do not depend on how many
//! worker threads the ambient rayon pool has.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type LabRng = ChaCha8Rng;

/// Independent counter-based substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Maps `0..blocks` in parallel and returns results in index order.
pub fn ordered_blocks<T, F>(blocks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..blocks).into_par_iter().map(f).collect()
}
