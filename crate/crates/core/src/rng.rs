//! Seeded random number generation.
//!
//! Every stochastic operation in this crate takes an explicit generator, so a
//! run is fully determined by its seed. The generator is ChaCha8, whose
//! stream for a given seed is identical on every platform.

use rand::SeedableRng;

/// The pseudo-random generator used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Create a generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Derive a child seed from a master seed and a list of context parts
/// (stream tag, noise level bits, restart index, iteration counter, ...).
///
/// The derivation chains splitmix64 over the parts: any change to any part
/// yields an unrelated child stream, while the same inputs always produce
/// the same seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &part in parts {
        state = splitmix64(state ^ part);
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
