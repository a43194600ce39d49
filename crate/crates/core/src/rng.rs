//! Stateless 64-bit mixing.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed and
//! a key (an edge key, a trial index, a draw index). Nothing here carries
//! state, so results do not depend on iteration order or thread count.
//!
//! Constants, so that other implementations can reproduce the streams:
//!
//! - `mix64` is the SplitMix64 finalizer: `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!   z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`.
//! - `GOLDEN_GAMMA = 0x9E3779B97F4A7C15`.
//! - `derive_seed(m, t) = mix64(m + (t + 1) * GOLDEN_GAMMA)` (wrapping).
//! - `key_hash` is 64-bit FNV-1a over the UTF-8 bytes of the key.
//! - `keyed_u64(seed, key) = mix64(mix64(seed) ^ key_hash(key))`.
//! - `stream_u64(seed, i) = mix64(seed + (i + 1) * GOLDEN_GAMMA)`, i.e. the
//!   same construction as `derive_seed`.
//! - `unit_open(x) = ((x >> 12) + 0.5) * 2^-52`, which lies in (0, 1).

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// `derive_seed(0, 0)`; pinned so that ports can check their mixing.
pub const DERIVE_SEED_ZERO_ZERO: u64 = 0xE220_A839_7B1D_CDAF;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed. Injective in `trial` for a fixed `master`.
#[inline]
pub fn derive_seed(master: u64, trial: u64) -> u64 {
    mix64(master.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn key_hash(key: &str) -> u64 {
    key.bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[inline]
pub fn keyed_u64(seed: u64, key: &str) -> u64 {
    mix64(mix64(seed) ^ key_hash(key))
}

#[inline]
pub fn stream_u64(seed: u64, index: u64) -> u64 {
    derive_seed(seed, index)
}

/// Maps 52 high bits to the open unit interval; never returns 0 or 1.
#[inline]
pub fn unit_open(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[inline]
pub fn keyed_uniform(seed: u64, key: &str) -> f64 {
    unit_open(keyed_u64(seed, key))
}

#[inline]
pub fn stream_uniform(seed: u64, index: u64) -> f64 {
    unit_open(stream_u64(seed, index))
}
