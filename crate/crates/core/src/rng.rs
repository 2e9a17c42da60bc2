//! Reproducible per-path random number streams.
//!
//! Every simulated path owns a `(master_seed, stream_id)` pair. ChaCha's
//! independent stream counter gives statistically independent sequences for
//! distinct ids while the same pair reproduces the identical sequence on any
//! run and any machine, regardless of how paths are scheduled over workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Handle for one reproducible stream of Gaussian increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
        }
    }

    /// Same master seed, different stream.
    pub fn offset(&self, delta: u64) -> Self {
        RngStream::new(self.master_seed, self.stream_id + delta)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Iterator of i.i.d. `N(0, dt)` increments.
    pub fn gaussian_increments(&self, dt: f64) -> GaussianIncrements {
        GaussianIncrements {
            rng: self.rng(),
            sd: dt.sqrt(),
        }
    }
}

/// Endless stream of centered Gaussian increments with variance `dt`.
#[derive(Debug, Clone)]
pub struct GaussianIncrements {
    rng: ChaCha8Rng,
    sd: f64,
}

impl Iterator for GaussianIncrements {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let z: f64 = self.rng.sample(StandardNormal);
        Some(z * self.sd)
    }
}
