//! Seed derivation and chunked Monte Carlo reduction.
//!
//! Every stochastic stage gets its own stream: the stage name is hashed with
//! SHA-256 and mixed into the master seed. A stage's samples are split into a
//! fixed number of chunks, each with its own ChaCha8 generator; partial
//! results are combined in chunk order, so the outcome depends only on
//! `(seed, n_samples, chunks)` and never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_CHUNKS: usize = 16;

/// Sample size, master seed and chunk count of a Monte Carlo computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub n_samples: usize,
    pub seed: u64,
    pub chunks: usize,
}

impl MonteCarlo {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            chunks: DEFAULT_CHUNKS,
        }
    }

    pub fn with_chunks(mut self, chunks: usize) -> Self {
        self.chunks = chunks;
        self
    }

    pub fn validate(&self, min_samples: usize) -> Result<()> {
        if self.n_samples < min_samples {
            return Err(Error::Domain(format!(
                "at least {min_samples} Monte Carlo samples are required, got {}",
                self.n_samples
            )));
        }
        if self.chunks == 0 {
            return Err(Error::Domain("chunk count must be positive".into()));
        }
        Ok(())
    }

    /// Same sample size and chunking, seed replaced by the stage seed.
    pub fn stage(&self, name: &str) -> Self {
        Self {
            seed: derive_seed(self.seed, name),
            ..*self
        }
    }

    /// Sizes of the chunks; earlier chunks absorb the remainder.
    pub fn chunk_sizes(&self) -> Vec<usize> {
        let chunks = self.chunks.max(1);
        let base = self.n_samples / chunks;
        let extra = self.n_samples % chunks;
        (0..chunks).map(|c| base + usize::from(c < extra)).collect()
    }

    /// Runs `work(rng, chunk_size)` for every chunk in parallel and returns
    /// the partial results in chunk order.
    pub fn map_chunks<T, F>(&self, work: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
    {
        self.chunk_sizes()
            .into_par_iter()
            .enumerate()
            .map(|(c, size)| {
                let mut rng = chunk_rng(self.seed, c as u64);
                work(&mut rng, size)
            })
            .collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a named stage of a run.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let digest = Sha256::digest(stage.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    splitmix64(master ^ u64::from_le_bytes(head))
}

/// Generator for one chunk of a stage.
pub fn chunk_rng(stage_seed: u64, chunk: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(stage_seed ^ splitmix64(chunk)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunk_sizes_cover_samples() {
        let mc = MonteCarlo::new(103, 1).with_chunks(10);
        let sizes = mc.chunk_sizes();
        assert_eq!(sizes.iter().sum::<usize>(), 103);
        assert_eq!(sizes[0], 11);
        assert_eq!(sizes[9], 10);
    }

    #[test]
    fn stages_are_distinct_and_stable() {
        assert_eq!(derive_seed(7, "a"), derive_seed(7, "a"));
        assert_ne!(derive_seed(7, "a"), derive_seed(7, "b"));
        assert_ne!(derive_seed(7, "a"), derive_seed(8, "a"));
    }

    #[test]
    fn map_chunks_is_ordered_and_deterministic() {
        let mc = MonteCarlo::new(1000, 42).with_chunks(8);
        let run = || mc.map_chunks(|rng, n| (0..n).map(|_| rng.random::<f64>()).sum::<f64>());
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
    }

    #[test]
    fn validate_limits() {
        assert!(MonteCarlo::new(10, 0).validate(100).is_err());
        assert!(MonteCarlo::new(10, 0).with_chunks(0).validate(1).is_err());
        assert!(MonteCarlo::new(100, 0).validate(100).is_ok());
    }
}
