//! Random sources for dropout decisions.
//!
//! [`SeededRng`] wraps ChaCha8 (`rand_chacha`), seeded through
//! `SeedableRng::seed_from_u64`. A Bernoulli draw consumes exactly one `u64`
//! and compares its top 53 bits, read as a float in `[0, 1)`, against `p`.
//! The stream is therefore fixed by the seed on every platform.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Supplier of keep/drop decisions.
pub trait RandomSource {
    /// Returns `true` with probability `p`.
    fn bernoulli(&mut self, p: f64) -> bool;
}

impl<R: RandomSource + ?Sized> RandomSource for &mut R {
    fn bernoulli(&mut self, p: f64) -> bool {
        (**self).bernoulli(p)
    }
}

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RandomSource for SeededRng {
    fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

/// Always keeps. Used by the deterministic (inference) path.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysKeep;

impl RandomSource for AlwaysKeep {
    fn bernoulli(&mut self, _p: f64) -> bool {
        true
    }
}

/// Replays a fixed sequence of decisions, ignoring `p`. Once the script runs
/// out every further draw keeps.
///
/// Useful for reproducing a specific dropout outcome by hand.
#[derive(Clone, Debug, Default)]
pub struct ScriptedSource {
    script: VecDeque<bool>,
    draws: usize,
}

impl ScriptedSource {
    pub fn new<I: IntoIterator<Item = bool>>(decisions: I) -> Self {
        Self {
            script: decisions.into_iter().collect(),
            draws: 0,
        }
    }

    /// Number of draws made so far.
    pub fn draws(&self) -> usize {
        self.draws
    }
}

impl RandomSource for ScriptedSource {
    fn bernoulli(&mut self, _p: f64) -> bool {
        self.draws += 1;
        self.script.pop_front().unwrap_or(true)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th unit of work (line, epoch, trial) under `base`.
///
/// Work can be partitioned across any number of workers without changing
/// results, since each unit's seed depends only on `(base, index)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}
