//! Reproducible circularly-symmetric complex Gaussian noise.
//!
//! Each stream is a pure function of `(seed, trial, phase)`: the ChaCha key
//! comes from the seed and the stream id from the trial index and phase tag,
//! so trials can be generated in any order or on any worker.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// Which scan the noise belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Downlink samples at the user.
    UserScan = 0,
    /// Echo samples at the IRS sensing elements.
    EchoScan = 1,
}

const PHASE_COUNT: u64 = 2;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: Option<ChaCha20Rng>,
    sigma2: f64,
    std_per_component: f64,
}

impl NoiseStream {
    /// Noise of total variance `sigma2` (σ²/2 per real component).
    pub fn new(seed: u64, trial: u64, phase: Phase, sigma2: f64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(trial.wrapping_mul(PHASE_COUNT).wrapping_add(phase as u64));
        NoiseStream {
            rng: Some(rng),
            sigma2,
            std_per_component: (sigma2 / 2.0).sqrt(),
        }
    }

    /// A stream that only yields zeros.
    pub fn silent() -> Self {
        NoiseStream {
            rng: None,
            sigma2: 0.0,
            std_per_component: 0.0,
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sample(&mut self) -> Complex64 {
        match self.rng.as_mut() {
            Some(rng) => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) * self.std_per_component
            }
            None => Complex64::new(0.0, 0.0),
        }
    }
}
