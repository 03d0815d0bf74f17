//! Deterministic random streams.
//!
//! Every simulation draws from a `ChaCha8Rng` keyed by a root seed, a
//! purpose tag and a replicate index. The root seed and tag are mixed with
//! SplitMix64; the replicate index selects the ChaCha stream, so replicates
//! are independent and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

/// Purpose tags keep streams for different jobs apart under one root seed.
pub mod purpose {
    pub const COALESCENT: u64 = 0x636f_616c;
    pub const LOOKDOWN: u64 = 0x6c6f_6f6b;
    pub const BRIDGE: u64 = 0x6272_6964;
    pub const TYPES: u64 = 0x7479_7065;
    pub const VALIDATE: u64 = 0x7661_6c69;
    pub const EXTINCTION: u64 = 0x6578_7469;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed, e.g. for a sub-test of a validation suite.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag)
}

/// Stream `index` of the generator for `(seed, purpose)`.
pub fn stream(seed: u64, purpose: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose));
    rng.set_stream(index);
    rng
}

/// Runs `f(i, rng_i)` for `i in 0..count` in parallel and returns results in
/// index order.
pub fn replicate<T, F>(count: usize, seed: u64, purpose: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, purpose, i as u64);
            f(i, &mut rng)
        })
        .collect()
}
