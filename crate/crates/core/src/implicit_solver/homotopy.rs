//! Continuation from the trivial point `J = (1, 2, …, d)`.
//!
//! With `g_i(x) = a_i − i + Σ_{j≠i} c_ij/(x_i − x_j)` the curve
//! `x(t) = g(x(t)) + J + (t − 1) g(J)` starts at `x(0) = J` and solves
//!
//! ```text
//! (I − ∂g/∂x) dx/dt = g(J)
//! ```
//!
//! Since `I − ∂g/∂x ≥ I`, `|dx/dt| ≤ |g(J)|` and the curve cannot reach the
//! chamber boundary in finite time. `x(1)` is the root; it is integrated with
//! classical fourth-order Runge–Kutta and polished by Newton.

use nalgebra::{Cholesky, DVector};

use super::newton::newton_from;
use super::{ImplicitProblem, Method, SolveReport, SolverOptions};
use crate::error::{Error, Result};

/// Relative slack on the speed bound `|dx/dt| ≤ |g(J)|` for rounding.
const SPEED_SLACK: f64 = 1e-9;

/// Smallest step before the integrator gives up.
const MIN_STEP: f64 = 1e-12;

/// Accepted points of the continuation curve.
#[derive(Clone, Debug)]
pub struct HomotopyTrace {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// `|g(J)|`, the bound on the speed along the curve.
    pub speed_bound: f64,
    /// Largest `|dx/dt|` seen at any stage.
    pub max_speed: f64,
}

struct Field<'a> {
    problem: &'a ImplicitProblem,
    g_at_j: DVector<f64>,
    bound: f64,
    max_speed: f64,
}

impl Field<'_> {
    /// `dx/dt` at `x`, or `None` if `x` has left the chamber.
    fn velocity(&mut self, x: &[f64]) -> Result<Option<DVector<f64>>> {
        if !crate::in_chamber(x) {
            return Ok(None);
        }
        let m = self.problem.jacobian_unchecked(x);
        let Some(chol) = Cholesky::new(m) else {
            return Ok(None);
        };
        let v = chol.solve(&self.g_at_j);
        let speed = v.norm();
        if !speed.is_finite() {
            return Ok(None);
        }
        if speed > self.bound * (1.0 + SPEED_SLACK) + f64::MIN_POSITIVE {
            return Err(Error::OrderViolation {
                method: Method::Homotopy,
                detail: format!("speed {speed} exceeds bound |g(J)| = {}", self.bound),
            });
        }
        self.max_speed = self.max_speed.max(speed);
        Ok(Some(v))
    }

    /// One RK4 step of length `h`; `None` if any stage leaves the chamber.
    fn rk4(&mut self, x: &[f64], h: f64) -> Result<Option<Vec<f64>>> {
        let d = x.len();
        let shifted = |base: &[f64], k: &DVector<f64>, s: f64| -> Vec<f64> {
            (0..d).map(|i| base[i] + s * k[i]).collect()
        };
        let Some(k1) = self.velocity(x)? else { return Ok(None) };
        let Some(k2) = self.velocity(&shifted(x, &k1, 0.5 * h))? else { return Ok(None) };
        let Some(k3) = self.velocity(&shifted(x, &k2, 0.5 * h))? else { return Ok(None) };
        let Some(k4) = self.velocity(&shifted(x, &k3, h))? else { return Ok(None) };
        let next: Vec<f64> = (0..d)
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        Ok(crate::in_chamber(&next).then_some(next))
    }
}

/// Integrates the continuation curve from `t = 0` to `t = 1` with
/// `opts.homotopy_steps` nominal steps, halving a step whenever a stage would
/// leave the chamber.
pub fn homotopy_trace(problem: &ImplicitProblem, opts: &SolverOptions) -> Result<HomotopyTrace> {
    opts.validate()?;
    let d = problem.d();
    let j: Vec<f64> = (1..=d).map(|i| i as f64).collect();
    // g(J) = a − J + Σ c/(J_i − J_j).
    let mut g_at_j = vec![0.0; d];
    problem.residual_into(&j, &mut g_at_j);
    let g_at_j = DVector::from_iterator(d, g_at_j.iter().map(|r| -r));
    let bound = g_at_j.norm();

    let mut field = Field {
        problem,
        g_at_j,
        bound,
        max_speed: 0.0,
    };
    let nominal = 1.0 / opts.homotopy_steps as f64;
    let mut t = 0.0;
    let mut x = j;
    let mut times = vec![0.0];
    let mut points = vec![x.clone()];
    let mut h = nominal;
    while t < 1.0 {
        let step = h.min(1.0 - t);
        match field.rk4(&x, step)? {
            Some(next) => {
                x = next;
                t = if step >= 1.0 - t { 1.0 } else { t + step };
                times.push(t);
                points.push(x.clone());
                // Recover towards the nominal step after a refinement.
                h = (2.0 * h).min(nominal);
            }
            None => {
                h *= 0.5;
                if h < MIN_STEP {
                    return Err(Error::NonConvergence {
                        method: Method::Homotopy,
                        iterations: points.len(),
                        residual: f64::NAN,
                    });
                }
            }
        }
    }
    Ok(HomotopyTrace {
        times,
        points,
        speed_bound: bound,
        max_speed: field.max_speed,
    })
}

/// Continuation to `t = 1` followed by a Newton polish to `opts.tol`.
pub fn solve_homotopy(problem: &ImplicitProblem, opts: &SolverOptions) -> Result<SolveReport> {
    let trace = homotopy_trace(problem, opts)?;
    let steps = trace.points.len() - 1;
    let end = trace.points.into_iter().last().expect("trace holds the start point");
    match newton_from(problem, end, opts, opts.max_iter) {
        Ok((xi, polish, residual)) => Ok(SolveReport {
            xi,
            iterations: steps + polish,
            residual,
            method: Method::Homotopy,
        }),
        Err(Error::NonConvergence { residual, .. }) => Err(Error::NonConvergence {
            method: Method::Homotopy,
            iterations: steps + opts.max_iter,
            residual,
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implicit_solver::solve_newton;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn starts_at_j_and_stays_in_chamber() {
        let p = ImplicitProblem::uniform(vec![3.0, -2.0, 0.5, 0.0], 0.2).unwrap();
        let trace = homotopy_trace(&p, &SolverOptions::default()).unwrap();
        assert_eq!(trace.points[0], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(trace.times[0], 0.0);
        assert_eq!(*trace.times.last().unwrap(), 1.0);
        assert!(trace.points.iter().all(|x| crate::in_chamber(x)));
        assert!(trace.max_speed <= trace.speed_bound * (1.0 + SPEED_SLACK));
    }

    #[test]
    fn endpoint_is_close_to_root_before_polish() {
        let p = ImplicitProblem::uniform(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let trace = homotopy_trace(&p, &SolverOptions::default()).unwrap();
        let end = trace.points.last().unwrap();
        let s = 1.5f64.sqrt();
        for (u, v) in end.iter().zip([-s, 0.0, s]) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_cases_agree_with_newton() {
        let opts = SolverOptions::with_method(Method::Homotopy);
        let cases = [
            ImplicitProblem::uniform(vec![0.0, 0.0], 1.0).unwrap(),
            ImplicitProblem::uniform(vec![0.0; 3], 1.0).unwrap(),
            ImplicitProblem::uniform(vec![0.0, 3.0], 2.0).unwrap(),
        ];
        for p in &cases {
            let h = solve_homotopy(p, &opts).unwrap();
            let n = solve_newton(p, &opts).unwrap();
            for (u, v) in h.xi.iter().zip(&n.xi) {
                assert!((u - v).abs() <= 10.0 * opts.tol);
            }
        }
    }

    #[test]
    fn stiff_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let opts = SolverOptions::default();
        for _ in 0..300 {
            let d = rng.random_range(2..9);
            let a = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let p = ImplicitProblem::uniform(a, 10f64.powf(rng.random_range(-4.0..1.0))).unwrap();
            let r = solve_homotopy(&p, &opts).unwrap();
            assert!(r.residual <= 1e-10, "{p:?} {r:?} floor {}", p.rounding_floor(&r.xi));
            assert!(crate::in_chamber(&r.xi));
        }
    }
}
