//! Monte Carlo estimators and inequality oracles.
//!
//! The exact solution is not available, so strong errors are measured
//! against the semi-implicit scheme on a much finer grid driven by the same
//! Brownian path. Replications run in parallel with seeds derived from the
//! study's base seed and are reduced in replication order, so every estimate
//! is bit-reproducible regardless of the number of worker threads.

mod chi;
mod convergence;
mod inequalities;
mod moments;
mod stats;

pub use chi::{chi_bar, chi_bar_grid, chi_bar_sharp, ChiObjective};
pub use convergence::{
    fit_rate, run_convergence, strong_error, strong_errors, ConvergenceOutcome, ConvergenceStudy,
    ErrorMode, LevelError, PathwiseLevel, RateEstimate,
};
pub use inequalities::{
    random_chamber_point, sweep_full, sweep_nn, verify_gap_inequality_full,
    verify_gap_inequality_nn, GapInequality, SweepReport,
};
pub use moments::{
    collision_rate_explicit, estimate_moments, inverse_moment_bound, CollisionReport, MomentReport,
    MomentStudy,
};
pub use stats::{Estimate, MeanAccumulator};
