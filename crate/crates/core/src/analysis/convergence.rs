//! Strong errors against a fine-grid reference on common Brownian paths.

use rayon::prelude::*;

use super::stats::MeanAccumulator;
use crate::error::{Error, Result};
use crate::implicit_solver::SolverOptions;
use crate::model::ParticleSystem;
use crate::scheme::{replication_seed, simulate, BrownianPath, PathResult, Scheme, TimeGrid};

/// Error functional applied to the difference between a level-`n` path and
/// the reference on the level-`n` grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorMode {
    /// `E[sup_k |e(t_k)|^p]^{1/p}`.
    GridSupLp(f64),
    /// `E[|e(T)|²]^{1/2}`.
    TerminalL2,
    /// `E[sup_k |e(t_k)|²]^{1/2}`.
    GridSupL2,
}

impl ErrorMode {
    /// Exponent of the moment being estimated.
    pub fn exponent(self) -> f64 {
        match self {
            ErrorMode::GridSupLp(p) => p,
            ErrorMode::TerminalL2 | ErrorMode::GridSupL2 => 2.0,
        }
    }

    fn sample(self, err: &PathError) -> f64 {
        match self {
            ErrorMode::GridSupLp(p) => err.sup.powf(p),
            ErrorMode::TerminalL2 => err.terminal * err.terminal,
            ErrorMode::GridSupL2 => err.sup * err.sup,
        }
    }
}

/// Monte Carlo strong-error experiment.
///
/// Each replication draws one Brownian path at `ref_level`, simulates the
/// semi-implicit scheme on it as the reference solution, and simulates every
/// level in `levels` on the dyadic coarsening of the same path.
#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub system: ParticleSystem,
    pub horizon: f64,
    pub levels: Vec<usize>,
    pub ref_level: usize,
    pub replications: usize,
    pub error_mode: ErrorMode,
    pub base_seed: u64,
    pub solver: SolverOptions,
}

impl ConvergenceStudy {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be positive, got {}", self.horizon)));
        }
        if self.levels.is_empty() {
            return Err(Error::invalid("levels", "must not be empty"));
        }
        if !self.ref_level.is_power_of_two() {
            return Err(Error::invalid("ref_level", "must be a power of 2"));
        }
        for &n in &self.levels {
            if !n.is_power_of_two() {
                return Err(Error::invalid("levels", format!("levels must be powers of 2, got {n}")));
            }
        }
        let max = *self.levels.iter().max().expect("levels is non-empty");
        if self.ref_level < 4 * max {
            return Err(Error::invalid(
                "ref_level",
                format!("must be at least 4 x max(levels) = {}", 4 * max),
            ));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if let ErrorMode::GridSupLp(p) = self.error_mode {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::invalid("error_mode", format!("p must be positive, got {p}")));
            }
        }
        self.solver.validate()
    }
}

/// Strong error at one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelError {
    pub n: usize,
    pub error: f64,
    pub std_err: f64,
}

/// Pathwise statistic `sup_k |e(t_k)| · √(n / ln n)` at one level.
///
/// Reported only; it stays bounded across levels when the pathwise rate
/// `√(ln n / n)` holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathwiseLevel {
    pub n: usize,
    pub mean: f64,
    pub max: f64,
}

/// Errors at every level plus the pathwise trend from the same replications.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceOutcome {
    pub errors: Vec<LevelError>,
    pub trend: Vec<PathwiseLevel>,
}

#[derive(Clone, Copy, Debug, Default)]
struct PathError {
    sup: f64,
    terminal: f64,
}

fn distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn path_error(reference: &PathResult, coarse: &PathResult, stride: usize) -> PathError {
    let n = coarse.len() - 1;
    let mut sup = 0.0f64;
    for k in 1..=n {
        sup = sup.max(distance(reference.state(k * stride), coarse.state(k)));
    }
    PathError {
        sup,
        terminal: distance(reference.terminal(), coarse.terminal()),
    }
}

/// Per replication, the path errors at each of `levels`, in replication order.
fn replicate(study: &ConvergenceStudy, levels: &[usize]) -> Result<Vec<Vec<PathError>>> {
    let d = study.system.d();
    let ref_grid = TimeGrid::new(study.horizon, study.ref_level)?;
    let results: Vec<Result<Vec<PathError>>> = (0..study.replications)
        .into_par_iter()
        .map(|m| {
            let run = || -> Result<Vec<PathError>> {
                let seed = replication_seed(study.base_seed, m as u64);
                let fine = BrownianPath::generate(seed, d, study.horizon, study.ref_level)?;
                let reference =
                    simulate(&study.system, &ref_grid, &fine, Scheme::SemiImplicit, &study.solver)?;
                levels
                    .iter()
                    .map(|&n| {
                        if n == study.ref_level {
                            return Ok(PathError::default());
                        }
                        let stride = study.ref_level / n;
                        let path = fine.coarsen(stride)?;
                        let grid = TimeGrid::new(study.horizon, n)?;
                        let coarse =
                            simulate(&study.system, &grid, &path, Scheme::SemiImplicit, &study.solver)?;
                        Ok(path_error(&reference, &coarse, stride))
                    })
                    .collect()
            };
            run().map_err(|e| Error::Replication {
                replication: m,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

fn reduce_errors(study: &ConvergenceStudy, levels: &[usize], samples: &[Vec<PathError>]) -> Vec<LevelError> {
    let p = study.error_mode.exponent();
    levels
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let acc: MeanAccumulator = samples.iter().map(|s| study.error_mode.sample(&s[j])).collect();
            let est = acc.estimate();
            let (error, std_err) = if est.mean > 0.0 {
                // Delta method for m ↦ m^{1/p}.
                let error = est.mean.powf(1.0 / p);
                (error, error / (p * est.mean) * est.std_err)
            } else {
                (0.0, 0.0)
            };
            LevelError { n, error, std_err }
        })
        .collect()
}

fn reduce_trend(levels: &[usize], samples: &[Vec<PathError>]) -> Vec<PathwiseLevel> {
    levels
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let scale = if n > 1 { (n as f64 / (n as f64).ln()).sqrt() } else { 0.0 };
            let mut acc = MeanAccumulator::default();
            let mut max = 0.0f64;
            for s in samples {
                let v = s[j].sup * scale;
                acc.push(v);
                max = max.max(v);
            }
            PathwiseLevel { n, mean: acc.mean(), max }
        })
        .collect()
}

/// Strong errors and pathwise trend for every level of the study.
pub fn run_convergence(study: &ConvergenceStudy) -> Result<ConvergenceOutcome> {
    study.validate()?;
    let samples = replicate(study, &study.levels)?;
    Ok(ConvergenceOutcome {
        errors: reduce_errors(study, &study.levels, &samples),
        trend: reduce_trend(&study.levels, &samples),
    })
}

/// Strong errors for every level of the study, sharing the reference paths.
pub fn strong_errors(study: &ConvergenceStudy) -> Result<Vec<LevelError>> {
    run_convergence(study).map(|o| o.errors)
}

/// Strong error at a single level `n`, which must be one of the study's
/// levels or the reference level itself.
pub fn strong_error(study: &ConvergenceStudy, n: usize) -> Result<LevelError> {
    study.validate()?;
    if n != study.ref_level && !study.levels.contains(&n) {
        return Err(Error::invalid("n", format!("{n} is not a level of the study")));
    }
    let samples = replicate(study, &[n])?;
    Ok(reduce_errors(study, &[n], &samples)[0])
}

/// Least-squares fit of `log₂ error = intercept − slope · log₂ n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    pub levels: Vec<LevelError>,
    /// Positive rate `α` in `error ≈ C n^{−α}`.
    pub slope: f64,
    /// `log₂ C`.
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_rate(levels: &[LevelError]) -> Result<RateEstimate> {
    if levels.len() < 3 {
        return Err(Error::invalid("levels", format!("need at least 3 points, got {}", levels.len())));
    }
    for l in levels {
        if !(l.error > 0.0 && l.error.is_finite()) {
            return Err(Error::invalid("error", format!("must be positive at n = {}, got {}", l.n, l.error)));
        }
        if l.n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
    }
    let xs: Vec<f64> = levels.iter().map(|l| (l.n as f64).log2()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.error.log2()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("levels", "need at least two distinct n"));
    }
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateEstimate {
        levels: levels.to_vec(),
        slope: -beta,
        intercept,
        r_squared,
    })
}
