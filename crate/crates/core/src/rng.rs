//! Seeding and uniform draws shared by every stochastic component.
//!
//! All simulations use [`SimRng`], a PCG generator with 128-bit state and
//! 64-bit output (`Pcg64Mcg`). Replicate and split seeds are derived from a
//! single master seed through SplitMix64 so that results do not depend on
//! the order in which independent work items are executed.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};

pub type SimRng = rand_pcg::Pcg64Mcg;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of work item `index` under `master`. Distinct indices give
/// statistically independent streams.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Uniform draw on the open interval (0, 1); `ln` of the result is finite.
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..1000).map(|k| derive_seed(42, k)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_eq!(derive_seed(42, 7), seeds[7]);
        assert_ne!(derive_seed(43, 7), seeds[7]);
    }

    #[test]
    fn open_interval_draws() {
        let mut rng = rng_from_seed(1);
        for _ in 0..100_000 {
            let u = open01(&mut rng);
            assert!(u > 0.0 && u < 1.0);
            assert!(u.ln().is_finite());
        }
    }
}
