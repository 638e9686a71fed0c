//! Deterministic random-number streams.
//!
//! Every stochastic component draws from a ChaCha8 stream keyed by
//! (seed, purpose, level, index). Streams are attributed to logical units of
//! work (a particle, a resampling pass, a replicate), never to threads, so
//! results do not depend on thread count or scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream purposes. Values are part of the reproducibility contract: changing
/// them changes every sampled number.
pub mod purpose {
    pub const INIT: u64 = 1;
    pub const PROPAGATE: u64 = 2;
    pub const RESAMPLE: u64 = 3;
    pub const BASELINE: u64 = 4;
    pub const REPLICATE: u64 = 5;
    pub const PROBE: u64 = 6;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream from the run seed and a (purpose, level, index)
/// coordinate. The full 256-bit ChaCha key is filled so distinct coordinates
/// collide with negligible probability even across billions of streams.
pub fn stream(seed: u64, purpose: u64, level: u64, index: u64) -> Stream {
    let mut state = seed ^ 0x51ab_7037_1c60_66f3;
    let a = splitmix64(&mut state);
    state ^= purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let b = splitmix64(&mut state);
    state ^= level.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    let c = splitmix64(&mut state);
    state ^= index.wrapping_mul(0x1656_67B1_9E37_79F9);
    let d = splitmix64(&mut state);

    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Per-replicate seed for experiments that repeat a run R times.
pub fn replicate_seed(seed: u64, replicate: u64) -> u64 {
    let mut state = seed ^ 0x7e46_75d3_9f02_13b5 ^ replicate.wrapping_mul(0xA24B_AED4_963E_E407);
    splitmix64(&mut state)
}
