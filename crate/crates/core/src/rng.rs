//! Reproducible Gaussian noise.
//!
//! Each stream is a ChaCha8 generator keyed by `(seed, stream)`; normal
//! variates come from the inverse CDF applied to a 53-bit uniform on the
//! open interval (0, 1). The sequence is therefore fixed by the seed and the
//! stream index and does not depend on thread scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::special::normal_quantile;

pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform on (0, 1), never 0 or 1.
    pub fn next_open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        normal_quantile(self.next_open01())
    }

    pub fn fill(&mut self, sigma: f64, out: &mut [f64]) {
        for v in out {
            *v = sigma * self.next_standard();
        }
    }
}
