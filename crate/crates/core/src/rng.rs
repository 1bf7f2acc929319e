//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`ChaCha8Rng`] seeded through
//! [`rng_from_seed`]. ChaCha8 is portable and produces the same stream on
//! every platform, which is what lets simulated traces be compared
//! byte-for-byte.
//!
//! Independent sub-streams (one per Lipschitz probe, one per permutation
//! batch, ...) are obtained with [`derive_seed`] rather than by sharing one
//! generator across threads, so results do not depend on scheduling.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
