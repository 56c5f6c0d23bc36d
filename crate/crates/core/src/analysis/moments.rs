//! Moment and inverse-gap-moment estimators, and the explicit-scheme exit rate.

use rayon::prelude::*;

use super::stats::{Estimate, MeanAccumulator};
use crate::error::{Error, Result};
use crate::implicit_solver::SolverOptions;
use crate::model::ParticleSystem;
use crate::scheme::{replication_seed, simulate, BrownianPath, Scheme, TimeGrid};

/// Monte Carlo moment experiment on the semi-implicit scheme at level `n`.
#[derive(Clone, Debug)]
pub struct MomentStudy {
    pub system: ParticleSystem,
    pub horizon: f64,
    pub n: usize,
    pub p: f64,
    pub replications: usize,
    pub base_seed: u64,
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    /// Grid time actually used, the one nearest to the requested time.
    pub t: f64,
    pub p: f64,
    /// `E[|X(t)|^p]`.
    pub abs_moment: Estimate,
    /// `E[(X_{i+1}(t) − X_i(t))^{−p}]` for each adjacent pair.
    pub inv_gap_moments: Vec<Estimate>,
    /// `E[Σ_i (X_{i+1}(t) − X_i(t))^{−p}]`.
    pub sum_inv_gap: Estimate,
    /// `Σ_i gap_i(0)^{−p} · e^{pT‖b‖_Lip}`.
    pub bound: f64,
}

/// Inverse-moment bound `Σ_i gap_i(0)^{−p} e^{pT‖b‖_Lip}`.
pub fn inverse_moment_bound(system: &ParticleSystem, horizon: f64, p: f64) -> f64 {
    let lip = system.drift().lipschitz_constant();
    let sum: f64 = system.x0().windows(2).map(|w| (w[1] - w[0]).powf(-p)).sum();
    sum * (p * horizon * lip).exp()
}

/// Per-time sample: `|X|^p`, then `gap_i^{−p}` for each pair.
fn moment_samples(x: &[f64], p: f64) -> Vec<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    std::iter::once(norm.powf(p))
        .chain(x.windows(2).map(|w| (w[1] - w[0]).powf(-p)))
        .collect()
}

/// Estimates at the grid times nearest to each of `times`.
pub fn estimate_moments(study: &MomentStudy, times: &[f64]) -> Result<Vec<MomentReport>> {
    if !(study.p >= 0.0 && study.p.is_finite()) {
        return Err(Error::invalid("p", format!("must be >= 0, got {}", study.p)));
    }
    if study.replications == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let grid = TimeGrid::new(study.horizon, study.n)?;
    for &t in times {
        if !(0.0..=study.horizon).contains(&t) {
            return Err(Error::invalid("t", format!("{t} outside [0, {}]", study.horizon)));
        }
    }
    study.solver.validate()?;
    let indices: Vec<usize> = times.iter().map(|&t| grid.nearest_index(t)).collect();
    let d = study.system.d();

    let results: Vec<Result<Vec<Vec<f64>>>> = (0..study.replications)
        .into_par_iter()
        .map(|m| {
            let run = || -> Result<Vec<Vec<f64>>> {
                let seed = replication_seed(study.base_seed, m as u64);
                let path = BrownianPath::generate_uniform(seed, d, study.horizon, study.n)?;
                let sim = simulate(&study.system, &grid, &path, Scheme::SemiImplicit, &study.solver)?;
                Ok(indices.iter().map(|&k| moment_samples(sim.state(k), study.p)).collect())
            };
            run().map_err(|e| Error::Replication {
                replication: m,
                source: Box::new(e),
            })
        })
        .collect();
    let samples: Vec<Vec<Vec<f64>>> = results.into_iter().collect::<Result<_>>()?;

    let bound = inverse_moment_bound(&study.system, study.horizon, study.p);
    Ok(indices
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let mut accs = vec![MeanAccumulator::default(); d];
            let mut sum_acc = MeanAccumulator::default();
            for rep in &samples {
                let row = &rep[j];
                for (acc, &v) in accs.iter_mut().zip(row) {
                    acc.push(v);
                }
                sum_acc.push(row[1..].iter().sum());
            }
            MomentReport {
                t: grid.t(k),
                p: study.p,
                abs_moment: accs[0].estimate(),
                inv_gap_moments: accs[1..].iter().map(MeanAccumulator::estimate).collect(),
                sum_inv_gap: sum_acc.estimate(),
                bound,
            }
        })
        .collect())
}

/// Exits of the explicit scheme, with the semi-implicit scheme on the same
/// paths as a control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionReport {
    pub paths: usize,
    pub explicit_exits: usize,
    pub control_exits: usize,
    /// `explicit_exits / paths`.
    pub rate: f64,
}

/// Fraction of explicit-scheme paths that leave the chamber within `n` steps.
pub fn collision_rate_explicit(
    system: &ParticleSystem,
    horizon: f64,
    n: usize,
    replications: usize,
    seed: u64,
    solver: &SolverOptions,
) -> Result<CollisionReport> {
    if replications == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let grid = TimeGrid::new(horizon, n)?;
    solver.validate()?;
    let d = system.d();
    let results: Vec<Result<(bool, bool)>> = (0..replications)
        .into_par_iter()
        .map(|m| {
            let run = || -> Result<(bool, bool)> {
                let path = BrownianPath::generate_uniform(replication_seed(seed, m as u64), d, horizon, n)?;
                let explicit = simulate(system, &grid, &path, Scheme::Explicit, solver)?;
                let control = simulate(system, &grid, &path, Scheme::SemiImplicit, solver)?;
                Ok((explicit.exited_chamber, !(control.min_gap > 0.0)))
            };
            run().map_err(|e| Error::Replication {
                replication: m,
                source: Box::new(e),
            })
        })
        .collect();
    let outcomes: Vec<(bool, bool)> = results.into_iter().collect::<Result<_>>()?;
    let explicit_exits = outcomes.iter().filter(|o| o.0).count();
    let control_exits = outcomes.iter().filter(|o| o.1).count();
    Ok(CollisionReport {
        paths: replications,
        explicit_exits,
        control_exits,
        rate: explicit_exits as f64 / replications as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linspace, DiffusionSpec, DriftSpec};

    fn study(p: f64) -> MomentStudy {
        MomentStudy {
            system: ParticleSystem::dyson(4.0, linspace(-1.0, 1.0, 3)).unwrap(),
            horizon: 1.0,
            n: 64,
            p,
            replications: 50,
            base_seed: 5,
            solver: SolverOptions::default(),
        }
    }

    #[test]
    fn initial_time_is_exact() {
        let r = &estimate_moments(&study(2.0), &[0.0]).unwrap()[0];
        assert_eq!(r.t, 0.0);
        for e in &r.inv_gap_moments {
            assert_eq!(e.mean, 1.0);
            assert_eq!(e.std_err, 0.0);
        }
        assert_eq!(r.sum_inv_gap.mean, 2.0);
        assert!((r.abs_moment.mean - 2.0).abs() < 1e-14);
        assert_eq!(r.bound, 2.0);
    }

    #[test]
    fn zeroth_moment_is_one() {
        let r = &estimate_moments(&study(0.0), &[0.5, 1.0]).unwrap();
        for report in r {
            assert_eq!(report.abs_moment.mean, 1.0);
            assert!(report.inv_gap_moments.iter().all(|e| e.mean == 1.0));
        }
    }

    #[test]
    fn bound_includes_drift_lipschitz_constant() {
        let system = ParticleSystem::dyson(4.0, vec![0.0, 2.0])
            .unwrap()
            .with_drift(DriftSpec::OrnsteinUhlenbeck { theta: 0.5, mu: vec![0.0, 0.0] })
            .unwrap();
        let b = inverse_moment_bound(&system, 2.0, 3.0);
        assert!((b - 0.125 * 3f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_times_outside_horizon() {
        assert!(estimate_moments(&study(1.0), &[1.5]).is_err());
        assert!(estimate_moments(&study(-1.0), &[0.5]).is_err());
    }

    #[test]
    fn explicit_scheme_can_exit() {
        let system = ParticleSystem::dyson(1.0, linspace(-1.0, 1.0, 3)).unwrap();
        let r = collision_rate_explicit(&system, 1.0, 4, 2000, 3, &SolverOptions::default()).unwrap();
        assert!(r.explicit_exits > 0);
        assert_eq!(r.control_exits, 0);
        assert!((0.0..=1.0).contains(&r.rate));
    }

    #[test]
    fn no_exits_without_noise() {
        let system = ParticleSystem::dyson(1.0, linspace(-1.0, 1.0, 3))
            .unwrap()
            .with_diffusion(DiffusionSpec::zero(3))
            .unwrap();
        let r = collision_rate_explicit(&system, 1.0, 4, 10, 3, &SolverOptions::default()).unwrap();
        assert_eq!(r.rate, 0.0);
    }
}
