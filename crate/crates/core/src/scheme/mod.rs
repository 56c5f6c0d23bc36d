//! Time stepping on a uniform grid `t_k = kT/n`.
//!
//! The semi-implicit scheme treats only the singular repulsion implicitly:
//!
//! ```text
//! X(t_{k+1}) = X(t_k) + { Σ_{j≠i} γ_ij / (X_i(t_{k+1}) − X_j(t_{k+1})) + b_i(X(t_k)) } h
//!                     + Σ_j σ_ij(X(t_k)) ΔW_j
//! ```
//!
//! Each step is the implicit system with `a = X(t_k) + b(X(t_k)) h + σ(X(t_k)) ΔW`
//! and `c = γ h`, whose unique ordered root keeps the path in the chamber.
//! The explicit scheme evaluates the repulsion at `t_k` and can leave it.

mod brownian;

use std::fmt;
use std::str::FromStr;

pub use brownian::{replication_seed, BrownianPath};

use crate::error::{Error, Result};
use crate::implicit_solver::{self, ImplicitProblem, SolveReport, SolverOptions};
use crate::model::ParticleSystem;

/// Uniform grid on `[0, T]` with `n` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("T", format!("must be > 0, got {horizon}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        Ok(TimeGrid { horizon, n })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// `t_k = kT/n`, with `t_n = T` exactly.
    pub fn t(&self, k: usize) -> f64 {
        if k == self.n {
            return self.horizon;
        }
        k as f64 * self.horizon / self.n as f64
    }

    /// Index of the grid time nearest to `t` (clamped to `[0, T]`).
    pub fn nearest_index(&self, t: f64) -> usize {
        let k = (t / self.horizon * self.n as f64).round();
        k.clamp(0.0, self.n as f64) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    SemiImplicit,
    Explicit,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::SemiImplicit => "semi_implicit",
            Scheme::Explicit => "explicit",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi_implicit" => Ok(Scheme::SemiImplicit),
            "explicit" => Ok(Scheme::Explicit),
            other => Err(Error::invalid("scheme", format!("unknown scheme {other:?}"))),
        }
    }
}

/// Explicit part of a step: `x + b(x) h + σ(x) ΔW`.
fn explicit_offsets(system: &ParticleSystem, state: &[f64], h: f64, dw: &[f64]) -> Vec<f64> {
    let d = state.len();
    let mut drift = vec![0.0; d];
    let mut noise = vec![0.0; d];
    system.drift().eval_into(state, &mut drift);
    system.diffusion().apply_into(state, dw, &mut noise);
    (0..d).map(|i| state[i] + drift[i] * h + noise[i]).collect()
}

fn check_step_inputs(system: &ParticleSystem, state: &[f64], h: f64, dw: &[f64]) -> Result<()> {
    let d = system.d();
    if state.len() != d || dw.len() != d {
        return Err(Error::invalid("state", format!("expected length {d}")));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", format!("must be finite and >= 0, got {h}")));
    }
    crate::chamber_min_gap(state).map(|_| ())
}

/// One semi-implicit step from an ordered `state`; the report's `xi` is the
/// new state.
pub fn step_semi_implicit(
    system: &ParticleSystem,
    state: &[f64],
    h: f64,
    dw: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_step_inputs(system, state, h, dw)?;
    if !(h > 0.0) {
        return Err(Error::invalid("h", "must be > 0 for the implicit step"));
    }
    let a = explicit_offsets(system, state, h, dw);
    let c = system.gamma() * h;
    let problem = ImplicitProblem::new(a, c)?;
    implicit_solver::solve(&problem, opts)
}

/// One explicit step. Returns the new state and whether it is still ordered.
pub fn step_explicit(
    system: &ParticleSystem,
    state: &[f64],
    h: f64,
    dw: &[f64],
) -> Result<(Vec<f64>, bool)> {
    check_step_inputs(system, state, h, dw)?;
    let d = state.len();
    let mut next = explicit_offsets(system, state, h, dw);
    let gamma = system.gamma();
    for i in 0..d {
        let repulsion: f64 = (0..d)
            .filter(|&j| j != i)
            .map(|j| gamma[(i, j)] / (state[i] - state[j]))
            .sum();
        next[i] += repulsion * h;
    }
    let ordered = crate::in_chamber(&next);
    Ok((next, ordered))
}

/// Grid values of one simulated path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    d: usize,
    /// Row `k` holds `X⁽ⁿ⁾(t_k)`, step-major.
    states: Vec<f64>,
    /// Smallest consecutive gap over all recorded states.
    pub min_gap: f64,
    /// Solver iterations per semi-implicit step (empty for the explicit scheme).
    pub solver_iters: Vec<usize>,
    /// Explicit scheme only: the last recorded state left the chamber and
    /// stepping stopped there.
    pub exited_chamber: bool,
}

impl PathResult {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of recorded states (`n + 1` unless the explicit scheme stopped early).
    pub fn len(&self) -> usize {
        self.states.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.d..(k + 1) * self.d]
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks(self.d)
    }

    /// Smallest gap of state `k` (negative once the chamber has been left).
    pub fn gap_min_at(&self, k: usize) -> f64 {
        min_gap_signed(self.state(k))
    }
}

fn min_gap_signed(x: &[f64]) -> f64 {
    x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Runs `grid.n()` steps driven by `path`, which must already be at level
/// `grid.n()`.
pub fn simulate(
    system: &ParticleSystem,
    grid: &TimeGrid,
    path: &BrownianPath,
    scheme: Scheme,
    opts: &SolverOptions,
) -> Result<PathResult> {
    let d = system.d();
    if path.steps() != grid.n() {
        return Err(Error::invalid(
            "path",
            format!("level {} does not match grid n = {}", path.steps(), grid.n()),
        ));
    }
    if path.d() != d {
        return Err(Error::invalid("path", format!("dimension {} != {d}", path.d())));
    }
    if (path.horizon() - grid.horizon()).abs() > 1e-12 * grid.horizon() {
        return Err(Error::invalid("path", "horizon does not match the grid"));
    }
    let h = grid.h();
    let mut states = Vec::with_capacity((grid.n() + 1) * d);
    states.extend_from_slice(system.x0());
    let mut min_gap = min_gap_signed(system.x0());
    let mut solver_iters = Vec::new();
    let mut exited_chamber = false;
    let mut current = system.x0().to_vec();
    for k in 0..grid.n() {
        let dw = path.increment(k);
        let next = match scheme {
            Scheme::SemiImplicit => {
                let report = step_semi_implicit(system, &current, h, dw, opts)?;
                solver_iters.push(report.iterations);
                report.xi
            }
            Scheme::Explicit => {
                let (next, ordered) = step_explicit(system, &current, h, dw)?;
                exited_chamber = !ordered;
                next
            }
        };
        min_gap = min_gap.min(min_gap_signed(&next));
        states.extend_from_slice(&next);
        current = next;
        if exited_chamber {
            break;
        }
    }
    Ok(PathResult {
        d,
        states,
        min_gap,
        solver_iters,
        exited_chamber,
    })
}
