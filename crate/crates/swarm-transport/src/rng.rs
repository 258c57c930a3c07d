//! Seed discipline.
//!
//! All randomness in the crate flows through [`ChaCha8Rng`] streams created
//! here. Per-episode streams are derived by counter from a base seed, so
//! evaluation episodes can run in parallel and still produce results that are
//! independent of worker scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; used to decorrelate derived seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic stream `index` of the generator family rooted at `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` rooted at `base`; see [`derive_seed`].
pub fn derived_rng(base: u64, index: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(base, index))
}
