//! Seeded random streams.
//!
//! Each quiz instance draws from its own substream: ChaCha8 keyed by the
//! master seed (expanded with `SeedableRng::seed_from_u64`) with the 64-bit
//! stream id set to the instance index. Uniform variates use the top 53 bits
//! of one `u64` output, so every draw consumes exactly one word and the
//! sequence is identical on every platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

/// Identifies a substream; cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

pub fn derive_stream(master_seed: u64, instance_index: u64) -> RngStream {
    RngStream { seed: master_seed, index: instance_index }
}

impl RngStream {
    pub fn sampler(&self) -> Sampler {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        Sampler { rng }
    }
}

/// Stateful reader over one stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

impl Sampler {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Uniform on the open interval `(0, 1)`, for inverse-CDF transforms.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * INV_2_53
    }

    /// Uniform integer in `0..n` (n > 0).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}
