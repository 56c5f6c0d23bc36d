use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Increments of a `d`-dimensional Brownian motion on a uniform grid of
/// `[0, T]`, stored step-major (`increments[k * d + j]` is `ΔW_j` on step `k`).
///
/// A path is a pure function of `(seed, d, T, steps)`: the increments are the
/// normal draws of a ChaCha8 stream keyed by `seed`, consumed in
/// `(step, coordinate)` order. Coarsening sums blocks of fine increments, so
/// every level of a study sees the same underlying path.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    seed: u64,
    d: usize,
    horizon: f64,
    steps: usize,
    increments: Vec<f64>,
}

impl BrownianPath {
    /// Finest level of a common-random-number study; `steps` must be a power of 2.
    pub fn generate(seed: u64, d: usize, horizon: f64, steps: usize) -> Result<Self> {
        if !steps.is_power_of_two() {
            return Err(Error::invalid("n_max", format!("must be a power of 2, got {steps}")));
        }
        Self::generate_uniform(seed, d, horizon, steps)
    }

    /// Single-level path with any number of steps. Same stream as [`Self::generate`].
    pub fn generate_uniform(seed: u64, d: usize, horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        if d == 0 {
            return Err(Error::invalid("d", "must be >= 1"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("T", format!("must be > 0, got {horizon}")));
        }
        let scale = (horizon / steps as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let increments = (0..steps * d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        Ok(BrownianPath {
            seed,
            d,
            horizon,
            steps,
            increments,
        })
    }

    /// Sums blocks of `factor` consecutive increments.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if !factor.is_power_of_two() || !self.steps.is_multiple_of(factor) {
            // Also covers factor == 0.
            return Err(Error::invalid(
                "factor",
                format!("must be a power of 2 dividing {}, got {factor}", self.steps),
            ));
        }
        let d = self.d;
        let steps = self.steps / factor;
        let mut increments = vec![0.0; steps * d];
        for (k, block) in self.increments.chunks(factor * d).enumerate() {
            for fine in block.chunks(d) {
                for (acc, w) in increments[k * d..(k + 1) * d].iter_mut().zip(fine) {
                    *acc += w;
                }
            }
        }
        Ok(BrownianPath {
            seed: self.seed,
            d,
            horizon: self.horizon,
            steps,
            increments,
        })
    }

    /// Coarsens to exactly `steps` increments.
    pub fn at_level(&self, steps: usize) -> Result<Self> {
        if steps == 0 || !self.steps.is_multiple_of(steps) {
            return Err(Error::invalid(
                "level",
                format!("{steps} does not divide {}", self.steps),
            ));
        }
        self.coarsen(self.steps / steps)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `ΔW` over step `k`.
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.d..(k + 1) * self.d]
    }

    /// `W(T)`.
    pub fn endpoint(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.d];
        for inc in self.increments.chunks(self.d) {
            for (acc, v) in w.iter_mut().zip(inc) {
                *acc += v;
            }
        }
        w
    }
}

/// Seed of replication `index` in a study keyed by `base`.
///
/// SplitMix64 finaliser over `base` and `index`, so neighbouring replications
/// get unrelated ChaCha keys.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic() {
        let a = BrownianPath::generate(42, 3, 1.0, 64).unwrap();
        let b = BrownianPath::generate(42, 3, 1.0, 64).unwrap();
        assert_eq!(a, b);
        let c = BrownianPath::generate(43, 3, 1.0, 64).unwrap();
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn rejects_non_dyadic_levels() {
        assert!(BrownianPath::generate(1, 2, 1.0, 12).is_err());
        let p = BrownianPath::generate(1, 2, 1.0, 16).unwrap();
        assert!(p.coarsen(3).is_err());
        assert!(p.coarsen(32).is_err());
        assert!(p.at_level(5).is_err());
    }

    #[test]
    fn increments_have_the_right_moments() {
        let t = 2.0;
        let n = 1 << 20;
        let p = BrownianPath::generate(2024, 1, t, n).unwrap();
        let m = p.increments().len() as f64;
        let mean = p.increments().iter().sum::<f64>() / m;
        let var = p.increments().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let target = t / n as f64;
        // Standard errors of the sample mean and variance of a normal sample.
        let se_mean = (target / m).sqrt();
        let se_var = target * (2.0 / (m - 1.0)).sqrt();
        assert!(mean.abs() < 4.0 * se_mean, "mean {mean}, se {se_mean}");
        assert!((var - target).abs() < 4.0 * se_var, "var {var}, target {target}");
    }

    #[test]
    fn coarsen_edge_factors() {
        let p = BrownianPath::generate(5, 2, 1.0, 32).unwrap();
        assert_eq!(p.coarsen(1).unwrap(), p);
        let whole = p.coarsen(32).unwrap();
        assert_eq!(whole.steps(), 1);
        for (a, b) in whole.increment(0).iter().zip(p.endpoint()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn replication_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..10_000).map(|i| replication_seed(7, i)).collect();
        assert_eq!(s.len(), 10_000);
    }

    proptest! {
        #[test]
        fn coarsening_composes(seed in any::<u64>(), d in 1usize..4, log_n in 2u32..8) {
            let p = BrownianPath::generate(seed, d, 1.0, 1 << log_n).unwrap();
            let twice = p.coarsen(2).unwrap().coarsen(2).unwrap();
            let once = p.coarsen(4).unwrap();
            for (a, b) in twice.increments().iter().zip(once.increments()) {
                prop_assert!((a - b).abs() <= 1e-14);
            }
            for (a, b) in once.endpoint().iter().zip(p.endpoint()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
