//! Seed derivation for reproducible parallel sampling.
//!
//! Every random stream is a ChaCha8 generator keyed by a 64-bit seed and a
//! stream number. Sub-seeds for independent queries are derived with
//! SplitMix64 so that runs are identical whatever the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for node-subset selection in nodal queries.
pub const SUBSET_STREAM: u64 = u64::MAX;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent seed from `seed` and a label.
pub fn derive(seed: u64, label: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(label.wrapping_add(0x6A09_E667_F3BC_C909)))
}

/// Generator for worker/stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
