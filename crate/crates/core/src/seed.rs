//! Seed derivation.
//!
//! Every random stream in the stack is derived from one root seed plus a
//! purpose label (and optionally an index), so that no two consumers share a
//! stream and results never depend on call order between them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `mix64(root ^ fnv1a(label))`.
pub fn derive(root: u64, label: &str) -> u64 {
    mix64(root ^ fnv1a(label.as_bytes(), FNV_OFFSET))
}

/// Seed for the `index`-th item of a labelled stream, e.g. one per sequence
/// or per training step.
pub fn derive_indexed(root: u64, label: &str, index: u64) -> u64 {
    mix64(derive(root, label) ^ mix64(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
