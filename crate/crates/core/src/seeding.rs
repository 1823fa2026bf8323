//! Deterministic seed derivation.
//!
//! Every stochastic component (episode setup, worker behaviors, observation
//! noise, exploration, bootstrap resampling) draws from its own ChaCha stream
//! whose seed is derived here. The mixing functions are fixed by this crate,
//! not borrowed from `std`, so byte-identical runs survive toolchain updates.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 step; the de-facto standard 64-bit mixer.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; used to fold string tags into stream ids.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a child seed from a master seed and a list of mixed-in parts.
/// The rotate keeps the fold asymmetric in (state, part).
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &p in parts {
        s = splitmix64(s.rotate_left(17) ^ splitmix64(p));
    }
    s
}

/// Derive a child seed keyed by a string tag plus numeric parts.
pub fn derive_tagged(master: u64, tag: &str, parts: &[u64]) -> u64 {
    let mut all = Vec::with_capacity(parts.len() + 1);
    all.push(fnv1a(tag.as_bytes()));
    all.extend_from_slice(parts);
    derive(master, &all)
}

/// The RNG used everywhere in this crate.
pub type Rng = ChaCha8Rng;

/// Build the crate-standard RNG from a derived seed.
pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
