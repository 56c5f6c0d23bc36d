//! Fixed-point iterations on the gap variables `x_i = ξ_{i+1} − ξ_i`.
//!
//! Both iterations solve, coordinate by coordinate, the scalar equation
//! `x − 2c/x = s` whose positive root is `½(s + √(s² + 8c))`, with `s` built
//! from the previous iterate.

use super::{
    max_norm, pair_gap, positive_root, GapVector, ImplicitProblem, Method, SolveReport,
    SolverOptions,
};
use crate::error::{Error, Result};

/// Rounding allowance, in units of the iterate's magnitude, when checking
/// monotone behaviour of an iteration.
const ORDER_SLACK: f64 = 8.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct GapSolve {
    pub gaps: GapVector,
    pub iterations: usize,
    /// Size of the last update (max-norm for the nearest-neighbour iteration,
    /// `|Δx| + |Δy|` for the three-particle iteration).
    pub last_change: f64,
}

impl GapSolve {
    pub(super) fn into_report(self, problem: &ImplicitProblem, method: Method) -> SolveReport {
        let xi = self.gaps.to_xi();
        let mut r = vec![0.0; xi.len()];
        problem.residual_into(&xi, &mut r);
        SolveReport {
            xi,
            iterations: self.iterations,
            residual: max_norm(&r),
            method,
        }
    }
}

/// Monotone iteration for nearest-neighbour coefficients.
///
/// With `Δa_i = a_{i+1} − a_i` and `c_i = c_{i,i+1}` the gaps solve
///
/// ```text
/// x_i − 2c_i/x_i = Δa_i − c_{i−1}/x_{i−1} − c_{i+1}/x_{i+1}
/// ```
///
/// (boundary terms absent). Starting from `x⁽⁰⁾_i = ½(Δa_i + √(Δa_i² + 8c_i))`
/// every coordinate decreases to the solution.
pub fn solve_fixed_point_nn(problem: &ImplicitProblem, opts: &SolverOptions) -> Result<GapSolve> {
    solve_fixed_point_nn_traced(problem, opts, |_| {})
}

/// As [`solve_fixed_point_nn`], calling `observe` with every iterate,
/// starting with `x⁽⁰⁾`.
pub fn solve_fixed_point_nn_traced(
    problem: &ImplicitProblem,
    opts: &SolverOptions,
    mut observe: impl FnMut(&[f64]),
) -> Result<GapSolve> {
    opts.validate()?;
    if !problem.is_tridiagonal() {
        return Err(Error::StructureMismatch {
            expected: "nearest-neighbour (tridiagonal) coefficients",
        });
    }
    let k = problem.d() - 1;
    let a = problem.a();
    let da: Vec<f64> = a.windows(2).map(|w| w[1] - w[0]).collect();
    let c: Vec<f64> = (0..k).map(|i| problem.c()[(i, i + 1)]).collect();

    let mut x: Vec<f64> = (0..k).map(|i| pair_gap(da[i], c[i])).collect();
    let mut next = x.clone();
    observe(&x);
    for iter in 1..=opts.max_iter {
        for i in 0..k {
            let mut s = da[i];
            if i > 0 {
                s -= c[i - 1] / x[i - 1];
            }
            if i + 1 < k {
                s -= c[i + 1] / x[i + 1];
            }
            next[i] = pair_gap(s, c[i]);
        }
        observe(&next);
        let mut change = 0.0f64;
        for i in 0..k {
            if next[i] > x[i] * (1.0 + ORDER_SLACK) || !(next[i] > 0.0) {
                return Err(Error::OrderViolation {
                    method: Method::FixedPointNn,
                    detail: format!(
                        "iterate {iter}, coordinate {i}: {} after {}",
                        next[i], x[i]
                    ),
                });
            }
            change = change.max((next[i] - x[i]).abs());
        }
        std::mem::swap(&mut x, &mut next);
        if change <= opts.tol {
            return Ok(GapSolve {
                gaps: GapVector::for_problem(problem, x),
                iterations: iter,
                last_change: change,
            });
        }
    }
    Err(Error::NonConvergence {
        method: Method::FixedPointNn,
        iterations: opts.max_iter,
        residual: f64::NAN,
    })
}

/// Alternating iteration for three particles with a common coefficient `c`.
///
/// After rescaling `ξ = √c ζ` the gaps `(x, y)` of `ζ` solve
///
/// ```text
/// x − 2/x = a − 1/y + 1/(x + y)
/// y − 2/y = b − 1/x + 1/(x + y)
/// ```
///
/// with `a = (a_2 − a_1)/√c`, `b = (a_3 − a_2)/√c`. The sequences start from
/// `x_1 = ½(a + √(a² + 8))`, `y_1 = ½(β + √(β² + 6))` with
/// `β = b − (|a| + √2)/2`, and interleave: odd `x` decrease, even `x`
/// increase, odd `y` increase, even `y` decrease. The interleaving is checked
/// on every step. The stopping rule `|Δx| + |Δy| ≤ tol` is applied in the
/// original (unscaled) units.
pub fn solve_alternating_d3(problem: &ImplicitProblem, opts: &SolverOptions) -> Result<GapSolve> {
    solve_alternating_d3_traced(problem, opts, |_, _| {})
}

/// As [`solve_alternating_d3`], calling `observe(x_n, y_n)` in normalised
/// units for `n = 1, 2, …`.
pub fn solve_alternating_d3_traced(
    problem: &ImplicitProblem,
    opts: &SolverOptions,
    mut observe: impl FnMut(f64, f64),
) -> Result<GapSolve> {
    opts.validate()?;
    if problem.d() != 3 {
        return Err(Error::StructureMismatch {
            expected: "d = 3 (the alternating iteration is not offered for d >= 4)",
        });
    }
    let c = problem.uniform_coefficient().ok_or(Error::StructureMismatch {
        expected: "uniform coefficients",
    })?;
    let scale = c.sqrt();
    let a_all = problem.a();
    let a = (a_all[1] - a_all[0]) / scale;
    let b = (a_all[2] - a_all[1]) / scale;
    let tol = opts.tol / scale;

    let mut x = positive_root(a, 8.0);
    let beta = b - 0.5 * (a.abs() + std::f64::consts::SQRT_2);
    let mut y = positive_root(beta, 6.0);
    observe(x, y);
    // Values two steps back, for the interleaving check.
    let mut prev: Option<(f64, f64)> = None;
    let mut prev2: Option<(f64, f64)>;
    for n in 2..=opts.max_iter + 1 {
        let coupling = 1.0 / (x + y);
        let nx = positive_root(a - 1.0 / y + coupling, 8.0);
        let ny = positive_root(b - 1.0 / x + coupling, 8.0);
        observe(nx, ny);
        prev2 = prev;
        prev = Some((x, y));
        if let Some((x2, y2)) = prev2 {
            check_interleaving(n, nx, x2, ny, y2)?;
        }
        let change = (nx - x).abs() + (ny - y).abs();
        x = nx;
        y = ny;
        if change <= tol {
            return Ok(GapSolve {
                gaps: GapVector::for_problem(problem, vec![scale * x, scale * y]),
                iterations: n - 1,
                last_change: change * scale,
            });
        }
    }
    Err(Error::NonConvergence {
        method: Method::AlternatingD3,
        iterations: opts.max_iter,
        residual: f64::NAN,
    })
}

/// Step `n` (1-based): odd `x` decrease and odd `y` increase, even `x`
/// increase and even `y` decrease. Ties within rounding are accepted.
fn check_interleaving(n: usize, x: f64, x_back: f64, y: f64, y_back: f64) -> Result<()> {
    let odd = n % 2 == 1;
    let slack = |u: f64, v: f64| ORDER_SLACK * u.abs().max(v.abs());
    let x_ok = if odd {
        x <= x_back + slack(x, x_back)
    } else {
        x >= x_back - slack(x, x_back)
    };
    let y_ok = if odd {
        y >= y_back - slack(y, y_back)
    } else {
        y <= y_back + slack(y, y_back)
    };
    if x_ok && y_ok {
        Ok(())
    } else {
        Err(Error::OrderViolation {
            method: Method::AlternatingD3,
            detail: format!(
                "interleaving broken at n = {n}: x {x_back} -> {x}, y {y_back} -> {y}"
            ),
        })
    }
}
