//! Seeded random streams, one per run.
//!
//! Each stream is a ChaCha8 keystream. The 256-bit key is expanded from
//! `base_seed` by `SeedableRng::seed_from_u64` and the run index selects the
//! 64-bit ChaCha stream (nonce), so streams for different run indices share a
//! key but never overlap. Standard normals use the ziggurat sampler of
//! `rand_distr::StandardNormal`; uniforms use the 53-bit `[0, 1)` conversion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct RngStream {
    base_seed: u64,
    substream_id: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(base_seed: u64, substream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(substream_id);
        RngStream {
            base_seed,
            substream_id,
            counter: 0,
            rng,
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn substream_id(&self) -> u64 {
        self.substream_id
    }

    /// Number of samples drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn uniform(&mut self) -> f64 {
        self.counter += 1;
        self.rng.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.counter += 1;
        self.rng.sample(StandardNormal)
    }

    /// Uniform index in `0..m`.
    pub fn index(&mut self, m: usize) -> usize {
        self.counter += 1;
        self.rng.random_range(0..m)
    }
}

/// Stream for run `run_index` of an ensemble seeded with `base_seed`.
pub fn rng_substream(base_seed: u64, run_index: u64) -> RngStream {
    RngStream::new(base_seed, run_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_identical() {
        let mut a = rng_substream(42, 0);
        let mut b = rng_substream(42, 0);
        for _ in 0..1000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
        assert_eq!(a.counter(), 2000);
    }

    #[test]
    fn substreams_differ() {
        let mut a = rng_substream(42, 0);
        let mut b = rng_substream(42, 1);
        let xs: Vec<f64> = (0..10_000).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..10_000).map(|_| b.uniform()).collect();
        assert_ne!(xs, ys);
        let shared = xs.iter().zip(&ys).filter(|(x, y)| x == y).count();
        assert_eq!(shared, 0);
    }

    #[test]
    fn golden_normal_sample() {
        let z = rng_substream(42, 7).standard_normal();
        assert_eq!(z.to_bits(), GOLDEN_42_7.to_bits(), "got {z:?}");
    }

    // First standard normal of stream (42, 7), captured from this generator.
    const GOLDEN_42_7: f64 = -0.7210298260550787;

    #[test]
    fn index_in_range_and_balanced() {
        let mut r = rng_substream(3, 3);
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[r.index(4)] += 1;
        }
        for c in counts {
            assert!((c as f64 / 40_000.0 - 0.25).abs() < 0.01);
        }
    }
}
