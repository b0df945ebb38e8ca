//! Deterministic seed fan-out.
//!
//! A single global seed is split into stage seeds with
//! `derive_seed(global, stage, index)`: the stage label is hashed with
//! 64-bit FNV-1a, xor-ed into the global seed together with
//! `index * 0x9E3779B97F4A7C15`, and the result is passed through one
//! SplitMix64 finalizer. Stage labels used by the library and CLI are
//! `field`, `trajectory`, `partition`, `init`, `train`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fnv1a(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(global: u64, stage: &str, index: u64) -> u64 {
    splitmix64(global ^ fnv1a(stage) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
