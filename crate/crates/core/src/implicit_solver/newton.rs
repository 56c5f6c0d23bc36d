use nalgebra::{Cholesky, DVector};

use super::{max_norm, norm2, pair_gap, ImplicitProblem, Method, SolveReport, SolverOptions};
use crate::error::{Error, Result};

/// Starting point with the mean of `a` and, for each neighbouring pair,
/// the gap the pair would have if it were decoupled from the others.
pub fn initial_guess(problem: &ImplicitProblem) -> Vec<f64> {
    let d = problem.d();
    let a = problem.a();
    let mut xi = Vec::with_capacity(d);
    xi.push(0.0);
    for i in 0..d - 1 {
        let g = pair_gap(a[i + 1] - a[i], problem.c()[(i, i + 1)]);
        xi.push(xi[i] + g);
    }
    let shift = problem.mean_offset() - xi.iter().sum::<f64>() / d as f64;
    for v in &mut xi {
        *v += shift;
    }
    xi
}

/// Damped Newton iteration from [`initial_guess`].
///
/// Steps are halved until every gap stays positive and the Euclidean residual
/// does not increase. Iteration stops once the max-norm residual is below
/// `opts.tol`; if no further progress is possible, a residual at the
/// accuracy of its own floating-point evaluation is also accepted. Heuristic fast path; [`super::solve_homotopy`] is the
/// certified fallback.
pub fn solve_newton(problem: &ImplicitProblem, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let (xi, iterations, residual) = newton_from(problem, initial_guess(problem), opts, opts.max_iter)?;
    Ok(SolveReport {
        xi,
        iterations,
        residual,
        method: Method::Newton,
    })
}

/// Returns `(ξ, iterations, max-norm residual)`. `start` must be ordered.
pub(super) fn newton_from(
    problem: &ImplicitProblem,
    start: Vec<f64>,
    opts: &SolverOptions,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let d = problem.d();
    let mut x = start;
    let mut r = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut r_trial = vec![0.0; d];
    problem.residual_into(&x, &mut r);
    let mut rmax = max_norm(&r);
    let mut rnorm = norm2(&r);

    let mut iterations = 0;
    for iter in 0..=max_iter {
        iterations = iter;
        if rmax <= opts.tol {
            return Ok((x, iter, rmax));
        }
        if iter == max_iter || !rmax.is_finite() {
            break;
        }
        let m = problem.jacobian_unchecked(&x);
        let Some(chol) = Cholesky::new(m) else {
            break;
        };
        let step = chol.solve(&DVector::from_iterator(d, r.iter().map(|v| -v)));

        let mut t = 1.0;
        let mut accepted = false;
        // 60 halvings reach below the resolution of any representable step.
        for _ in 0..60 {
            for i in 0..d {
                trial[i] = x[i] + t * step[i];
            }
            if crate::in_chamber(&trial) {
                problem.residual_into(&trial, &mut r_trial);
                let n = norm2(&r_trial);
                if n <= rnorm {
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut r, &mut r_trial);
        rmax = max_norm(&r);
        let previous = std::mem::replace(&mut rnorm, norm2(&r));
        if rnorm >= previous && rmax > opts.tol {
            iterations = iter + 1;
            break;
        }
    }
    // Stalled: accept only if the residual is down at the accuracy of its own
    // floating-point evaluation.
    if rmax <= problem.rounding_floor(&x) {
        return Ok((x, iterations, rmax));
    }
    Err(Error::NonConvergence {
        method: Method::Newton,
        iterations: max_iter,
        residual: rmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implicit_solver::residual;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn closed_form_cases() {
        let opts = SolverOptions::with_method(Method::Newton);
        let p = ImplicitProblem::uniform(vec![0.0, 0.0], 1.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&solve_newton(&p, &opts).unwrap().xi, &[-h, h], 1e-12));

        let p = ImplicitProblem::uniform(vec![0.0; 3], 1.0).unwrap();
        let s = 1.5f64.sqrt();
        assert!(close(&solve_newton(&p, &opts).unwrap().xi, &[-s, 0.0, s], 1e-12));

        let p = ImplicitProblem::uniform(vec![0.0, 3.0], 2.0).unwrap();
        assert!(close(&solve_newton(&p, &opts).unwrap().xi, &[-0.5, 3.5], 1e-12));
    }

    #[test]
    fn initial_guess_is_exact_for_two_particles() {
        let p = ImplicitProblem::uniform(vec![0.0, 3.0], 2.0).unwrap();
        let x = initial_guess(&p);
        assert!(close(&x, &[-0.5, 3.5], 1e-14));
        let r = solve_newton(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn reports_non_convergence() {
        let p = ImplicitProblem::uniform(vec![5.0, -5.0, 4.0, -4.0], 1e-3).unwrap();
        let opts = SolverOptions {
            max_iter: 1,
            tol: 1e-15,
            ..SolverOptions::default()
        };
        let err = solve_newton(&p, &opts).unwrap_err();
        assert!(err.is_non_convergence());
        let ok = solve_newton(&p, &SolverOptions::default()).unwrap();
        assert!(max_norm(&residual(&p, &ok.xi).unwrap()) <= 1e-12);
    }
}
