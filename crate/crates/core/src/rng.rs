//! The seeded random stream behind a run.
//!
//! Every random decision in a run comes from one [`DrawStream`], and every
//! draw is one `f64` sample from `[0, 1)`. The stream counts its draws so the
//! draw-order contract (scenario materialization first, then per tick, per
//! agent: one motivation draw, then one noise draw iff the agent worked and
//! noise is on) can be pinned by tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded, counted stream of unit-interval draws. ChaCha8 keeps the stream
/// identical across platforms and releases.
#[derive(Debug, Clone)]
pub struct DrawStream {
    rng: ChaCha8Rng,
    draws: u64,
}

impl DrawStream {
    pub fn from_seed(seed: u64) -> Self {
        DrawStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws: 0,
        }
    }

    /// One draw, uniform over `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    /// Number of draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}
