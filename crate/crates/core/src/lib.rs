//! Simulation of non-colliding stochastic particle systems.
//!
//! The particles follow
//!
//! ```text
//! dX_i = { Σ_{j≠i} γ_ij / (X_i − X_j) + b_i(X) } dt + Σ_j σ_ij(X) dW_j,   X(0) ∈ Δ_d
//! ```
//!
//! where `Δ_d = {x_1 < x_2 < … < x_d}` is the Weyl chamber. The crate provides
//!
//! * [`model`]: particle systems, coefficient families and parameter conditions,
//! * [`implicit_solver`]: solvers for the per-step system
//!   `ξ_i = a_i + Σ_{j≠i} c_ij / (ξ_i − ξ_j)` whose unique ordered root drives the scheme,
//! * [`scheme`]: the semi-implicit Euler–Maruyama scheme (which never leaves `Δ_d`),
//!   the explicit scheme for comparison, and common-random-number Brownian paths,
//! * [`analysis`]: strong-error and rate estimation, moment estimators and the
//!   gap inequalities behind the moment bounds.

pub mod analysis;
pub mod error;
pub mod implicit_solver;
pub mod model;
pub mod scheme;

pub use error::{Error, Result};
pub use implicit_solver::{ImplicitProblem, Method, SolveReport, SolverOptions};
pub use model::{DiffusionSpec, DriftSpec, ParticleSystem};
pub use scheme::{BrownianPath, PathResult, Scheme, TimeGrid};

/// Checks that `x` is strictly increasing and returns the smallest consecutive gap.
///
/// Returns `+∞` for a single coordinate.
pub fn chamber_min_gap(x: &[f64]) -> Result<f64> {
    let mut min_gap = f64::INFINITY;
    for (i, w) in x.windows(2).enumerate() {
        let gap = w[1] - w[0];
        // NaN fails this test too.
        if !(gap > 0.0) {
            return Err(Error::NotOrdered { index: i, gap });
        }
        min_gap = min_gap.min(gap);
    }
    Ok(min_gap)
}

/// `true` iff `x` lies in the open Weyl chamber.
pub fn in_chamber(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0])
}
