//! Deterministic, portable randomness for simulation runs.
//!
//! Every run owns exactly one [`EngineRng`], seeded from the 64-bit run seed
//! and consumed in a documented order (ascending agent id, fixed draw
//! sequence per agent). The generator is ChaCha8, a named stream cipher whose
//! keystream is stable across platforms and releases, so traces produced from
//! the same seed are byte-identical everywhere.
//!
//! All derived draws (floats, ranges, coin flips) are defined here in terms
//! of raw `next_u64` output rather than through distribution adapters, so the
//! mapping from seed to simulation behaviour is pinned by this module alone.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Seeded generator carried inside a [`super::World`].
#[derive(Debug, Clone)]
pub struct EngineRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl EngineRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Raw 64-bit draw; everything else is derived from this.
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision (top bits of one u64).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi). Callers guarantee lo < hi.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Coin flip with success probability `p`. p <= 0 never fires, p >= 1
    /// always does; exactly one u64 is consumed either way.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

impl PartialEq for EngineRng {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.inner.get_word_pos() == other.inner.get_word_pos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = EngineRng::new(7);
        let mut b = EngineRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_seeds_diverge() {
        let mut a = EngineRng::new(1);
        let mut b = EngineRng::new(2);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    // Golden values pin the generator algorithm itself. If this test ever
    // fails after a dependency bump, recorded traces are no longer
    // reproducible and the bump must be rejected.
    #[test]
    fn keystream_is_pinned() {
        let mut rng = EngineRng::new(0);
        let first: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
        assert_eq!(
            first,
            vec![
                13080132717333068652,
                8594738769458413623,
                12896916468484187878,
                1109962093070354556,
            ]
        );
    }

    #[test]
    fn f64_draws_stay_in_unit_interval() {
        let mut rng = EngineRng::new(42);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn bernoulli_extremes() {
        let mut rng = EngineRng::new(3);
        for _ in 0..100 {
            assert!(!rng.bernoulli(0.0));
            assert!(rng.bernoulli(1.0));
        }
    }

    #[test]
    fn equality_tracks_position() {
        let mut a = EngineRng::new(5);
        let b = EngineRng::new(5);
        assert_eq!(a, b);
        a.next_u64();
        assert_ne!(a, b);
    }
}
