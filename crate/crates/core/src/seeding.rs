//! Deterministic seed derivation.
//!
//! All randomness in this crate flows from a single 64-bit base seed. Derived
//! streams are obtained with a SplitMix64 mix over (base, stream, index), so
//! parallel workers can draw independent, reproducible generators without
//! sharing RNG state. The derivation is pure arithmetic: the same
//! (base, stream, index) triple always yields the same generator, regardless
//! of thread count or execution order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer. Bijective on u64, good avalanche behavior.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed for logical stream `stream`, element `index`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(stream)) ^ splitmix64(index))
}

/// Seeded ChaCha generator; stable output across platforms and versions.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
