use super::{l2_normalize, EmbedError};
use crate::hashing::seeded_hash;

pub const DEFAULT_HASH_DIM: usize = 256;
pub const DEFAULT_HASH_SEED: u64 = 42;

/// Signed feature hashing over a bag of tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self {
            dim: DEFAULT_HASH_DIM,
            seed: DEFAULT_HASH_SEED,
        }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if dim < 8 {
            return Err(EmbedError::DimensionTooSmall(dim));
        }
        Ok(Self { dim, seed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Each token adds +-1 at a hashed coordinate; the sum is L2-normalized.
    /// An empty token list gives the zero vector.
    pub fn embed<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f32> {
        let mut acc = vec![0.0f32; self.dim];
        for t in tokens {
            let h = seeded_hash(self.seed, t.as_ref());
            let idx = (h % self.dim as u64) as usize;
            acc[idx] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        l2_normalize(&acc)
    }
}

pub fn hash_embed<S: AsRef<str>>(tokens: &[S], dim: usize, seed: u64) -> Result<Vec<f32>, EmbedError> {
    Ok(HashEmbedder::new(dim, seed)?.embed(tokens))
}
