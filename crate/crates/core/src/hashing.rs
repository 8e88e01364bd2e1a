//! Seeded, platform-stable 64-bit hashing.
//!
//! `std`'s `DefaultHasher` is not guaranteed stable across releases, and every
//! artifact here (splits, negatives, hash embeddings) must be reproducible from
//! a seed, so a fixed FNV-1a + splitmix64 construction is used instead.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn seeded_hash(seed: u64, key: &str) -> u64 {
    mix64(fnv1a(key.as_bytes()) ^ mix64(seed))
}

/// A generator whose stream depends only on `(seed, key)`.
pub fn keyed_rng(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seeded_hash(seed, key))
}

/// Maps a hash to a uniform value in `[0, 1)` using its top 53 bits.
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}
