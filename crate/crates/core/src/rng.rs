//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 seeded with a 64-bit
//! value through `seed_from_u64`, on a stream selected by role. Replicate `r`
//! of anything seeded with `root` uses `root.wrapping_add(r)`. Normal variates
//! come from `rand_distr::StandardNormal` (ziggurat).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for simulated datasets.
pub const STREAM_DATA: u64 = 0;
/// Stream for GAP reference draws.
pub const STREAM_GAP_REFERENCE: u64 = 1;

/// Default root seed for every randomized entry point.
pub const DEFAULT_SEED: u64 = 20190501;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
