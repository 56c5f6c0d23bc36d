//! Gap inequalities behind the inverse-moment bounds, and random sweeps over
//! chamber points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Both sides of a gap inequality at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapInequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl GapInequality {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

fn gaps(x: &[f64], min_d: usize) -> Result<Vec<f64>> {
    if x.len() < min_d {
        return Err(Error::invalid("x", format!("need at least {min_d} coordinates, got {}", x.len())));
    }
    crate::chamber_min_gap(x)?;
    Ok(x.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Full-interaction inequality, strict `lhs < rhs`:
///
/// ```text
/// Σ_i Σ_{k≠i,i+1} 1 / ((x_{i+1}−x_i)^p (x_{i+1}−x_k)(x_i−x_k))  <  (2 − 3/d) Σ_i 1/(x_{i+1}−x_i)^{p+2}
/// ```
pub fn verify_gap_inequality_full(x: &[f64], p: f64) -> Result<GapInequality> {
    let g = gaps(x, 2)?;
    let d = x.len();
    let mut lhs = 0.0;
    for i in 0..d - 1 {
        let weight = g[i].powf(-p);
        for k in (0..d).filter(|&k| k != i && k != i + 1) {
            lhs += weight / ((x[i + 1] - x[k]) * (x[i] - x[k]));
        }
    }
    let rhs = (2.0 - 3.0 / d as f64) * g.iter().map(|v| v.powf(-(p + 2.0))).sum::<f64>();
    Ok(GapInequality { lhs, rhs })
}

/// Nearest-neighbour inequality, `lhs ≤ rhs`, with `chi` the constant from
/// [`super::chi_bar`]:
///
/// ```text
/// Σ_{i=1}^{d−2} [ 1/(g_{i+1} g_i^{p+1}) + 1/(g_{i+1}^{p+1} g_i) ]  ≤  chi Σ_i 1/g_i^{p+2}
/// ```
pub fn verify_gap_inequality_nn(x: &[f64], p: f64, chi: f64) -> Result<GapInequality> {
    let g = gaps(x, 3)?;
    let lhs = g
        .windows(2)
        .map(|w| 1.0 / (w[1] * w[0].powf(p + 1.0)) + 1.0 / (w[1].powf(p + 1.0) * w[0]))
        .sum();
    let rhs = chi * g.iter().map(|v| v.powf(-(p + 2.0))).sum::<f64>();
    Ok(GapInequality { lhs, rhs })
}

/// Chamber point starting at 0 with gaps log-uniform on `[10⁻³, 10³]`.
pub fn random_chamber_point<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(d);
    let mut pos = 0.0;
    x.push(pos);
    for _ in 1..d {
        pos += 10f64.powf(rng.random_range(-3.0..3.0));
        x.push(pos);
    }
    x
}

/// Outcome of checking an inequality at many random points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepReport {
    pub d: usize,
    pub p: f64,
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen.
    pub max_ratio: f64,
}

fn sweep(
    d: usize,
    p: f64,
    samples: usize,
    seed: u64,
    check: impl Fn(&[f64]) -> Result<(GapInequality, bool)>,
) -> Result<SweepReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_ratio = f64::NEG_INFINITY;
    for _ in 0..samples {
        let x = random_chamber_point(&mut rng, d);
        let (ineq, holds) = check(&x)?;
        if !holds {
            violations += 1;
        }
        max_ratio = max_ratio.max(ineq.ratio());
    }
    Ok(SweepReport {
        d,
        p,
        samples,
        violations,
        max_ratio,
    })
}

/// Strict full-interaction inequality at `samples` random points.
pub fn sweep_full(d: usize, p: f64, samples: usize, seed: u64) -> Result<SweepReport> {
    sweep(d, p, samples, seed, |x| {
        let r = verify_gap_inequality_full(x, p)?;
        Ok((r, r.lhs < r.rhs))
    })
}

/// Nearest-neighbour inequality at `samples` random points.
pub fn sweep_nn(d: usize, p: f64, chi: f64, samples: usize, seed: u64) -> Result<SweepReport> {
    sweep(d, p, samples, seed, |x| {
        let r = verify_gap_inequality_nn(x, p, chi)?;
        Ok((r, r.lhs <= r.rhs))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_examples() {
        let r = verify_gap_inequality_full(&[0.0, 1.0, 2.0], 0.0).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15);
        assert!((r.rhs - 2.0).abs() < 1e-15);
        for p in [0.0, 1.0, 3.5] {
            let r = verify_gap_inequality_full(&[-1.0, 4.0], p).unwrap();
            assert_eq!(r.lhs, 0.0);
            assert!(r.rhs > 0.0);
        }
    }

    #[test]
    fn nn_examples() {
        let r = verify_gap_inequality_nn(&[0.0, 1.0, 2.0], 0.0, 2f64.sqrt()).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-15);
        assert!((r.rhs - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn nn_is_homogeneous() {
        let x = [0.0, 0.3, 2.0, 2.1];
        for p in [0.0, 1.0, 2.0] {
            let base = verify_gap_inequality_nn(&x, p, 1.5).unwrap();
            for lambda in [1e-3, 0.5, 7.0] {
                let y: Vec<f64> = x.iter().map(|v| v * lambda).collect();
                let r = verify_gap_inequality_nn(&y, p, 1.5).unwrap();
                let s = lambda.powf(-(p + 2.0));
                assert!((r.lhs / (base.lhs * s) - 1.0).abs() < 1e-12);
                assert!((r.rhs / (base.rhs * s) - 1.0).abs() < 1e-12);
                assert!((r.ratio() - base.ratio()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_unordered_or_short_input() {
        assert!(verify_gap_inequality_full(&[0.0, 0.0, 1.0], 1.0).is_err());
        assert!(verify_gap_inequality_full(&[1.0], 1.0).is_err());
        assert!(verify_gap_inequality_nn(&[0.0, 1.0], 1.0, 1.0).is_err());
        assert!(verify_gap_inequality_nn(&[0.0, 2.0, 1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn random_points_are_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 2..9 {
            let x = random_chamber_point(&mut rng, d);
            assert_eq!(x.len(), d);
            assert!(crate::in_chamber(&x));
        }
    }

    #[test]
    fn small_full_sweep() {
        for d in 3..6 {
            let r = sweep_full(d, 1.0, 2000, 9).unwrap();
            assert_eq!(r.violations, 0);
            assert!(r.max_ratio < 1.0);
        }
    }
}
