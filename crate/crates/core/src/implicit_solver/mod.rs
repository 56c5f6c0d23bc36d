//! The per-step nonlinear system
//!
//! ```text
//! ξ_i = a_i + Σ_{j≠i} c_ij / (ξ_i − ξ_j),   i = 1, …, d
//! ```
//!
//! with `c` symmetric, non-negative and positive on the first off-diagonals.
//! It has exactly one root in the Weyl chamber and every solver here returns
//! that root or an error, never an unordered vector.
//!
//! Two facts drive the solvers:
//!
//! * `M = I − ∂g/∂ξ` (where `g_i = a_i + Σ c_ij/(ξ_i − ξ_j)`) satisfies
//!   `⟨My, y⟩ = |y|² + ½ Σ_{i≠j} c_ij (y_i − y_j)²/(ξ_i − ξ_j)² ≥ |y|²`,
//!   so Newton steps and the homotopy ODE use a Cholesky factorisation.
//! * Summing the equations gives `Σ ξ_i = Σ a_i`, so a solution is fixed by
//!   its consecutive gaps and the mean of `a`.

mod homotopy;
mod iterations;
mod newton;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{validate_interaction, Matrix};

pub use homotopy::{homotopy_trace, solve_homotopy, HomotopyTrace};
pub use iterations::{
    solve_alternating_d3, solve_alternating_d3_traced, solve_fixed_point_nn,
    solve_fixed_point_nn_traced, GapSolve,
};
pub use newton::{initial_guess, solve_newton};

/// Coefficients `(a, c)` of one implicit system.
#[derive(Clone, Debug, PartialEq)]
pub struct ImplicitProblem {
    a: Vec<f64>,
    c: Matrix,
}

impl ImplicitProblem {
    pub fn new(a: Vec<f64>, c: Matrix) -> Result<Self> {
        let d = a.len();
        if d < 2 {
            return Err(Error::invalid("a", format!("need at least 2 entries, got {d}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("a", "entries must be finite"));
        }
        validate_interaction("c", &c, d)?;
        Ok(ImplicitProblem { a, c })
    }

    /// All off-diagonal coefficients equal to `c`.
    pub fn uniform(a: Vec<f64>, c: f64) -> Result<Self> {
        let d = a.len();
        Self::new(a, crate::model::uniform_matrix(d, c))
    }

    /// Nearest-neighbour coefficients: `c_{i,i+1} = edges[i]`, zero beyond.
    pub fn tridiagonal(a: Vec<f64>, edges: &[f64]) -> Result<Self> {
        let d = a.len();
        if edges.len() + 1 != d {
            return Err(Error::invalid(
                "c",
                format!("expected {} edge coefficients, got {}", d.saturating_sub(1), edges.len()),
            ));
        }
        let c = Matrix::from_fn(d, d, |i, j| match (i, j) {
            _ if j == i + 1 => edges[i],
            _ if i == j + 1 => edges[j],
            _ => 0.0,
        });
        Self::new(a, c)
    }

    pub fn d(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    /// The same coefficients with every offset shifted by `s`.
    pub fn shifted(&self, s: f64) -> Self {
        ImplicitProblem {
            a: self.a.iter().map(|v| v + s).collect(),
            c: self.c.clone(),
        }
    }

    pub fn is_tridiagonal(&self) -> bool {
        let d = self.d();
        (0..d).all(|i| (i + 2..d).all(|j| self.c[(i, j)] == 0.0))
    }

    /// `Some(c)` when every off-diagonal coefficient equals `c`.
    pub fn uniform_coefficient(&self) -> Option<f64> {
        let d = self.d();
        let c0 = self.c[(0, 1)];
        (0..d)
            .all(|i| (i + 1..d).all(|j| self.c[(i, j)] == c0))
            .then_some(c0)
    }

    fn mean_offset(&self) -> f64 {
        self.a.iter().sum::<f64>() / self.d() as f64
    }

    /// Writes `r_i = ξ_i − a_i − Σ_{j≠i} c_ij/(ξ_i − ξ_j)`; assumes ξ ordered.
    pub(crate) fn residual_into(&self, xi: &[f64], out: &mut [f64]) {
        let d = self.d();
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                if j != i {
                    let c = self.c[(i, j)];
                    if c != 0.0 {
                        s += c / (xi[i] - xi[j]);
                    }
                }
            }
            out[i] = xi[i] - self.a[i] - s;
        }
    }

    /// Accuracy to which the residual can be evaluated in floating point at ξ,
    /// counting the rounding of each difference `ξ_i − ξ_j`.
    pub(crate) fn rounding_floor(&self, xi: &[f64]) -> f64 {
        let d = self.d();
        let mut worst = 0.0f64;
        for i in 0..d {
            let mut s = xi[i].abs() + self.a[i].abs();
            for j in (0..d).filter(|&j| j != i) {
                let c = self.c[(i, j)];
                if c != 0.0 {
                    let gap = (xi[i] - xi[j]).abs();
                    s += c / gap * (1.0 + (xi[i].abs() + xi[j].abs()) / gap);
                }
            }
            worst = worst.max(s);
        }
        4.0 * d as f64 * f64::EPSILON * worst
    }

    /// `M = I − ∂g/∂ξ`; assumes ξ ordered.
    pub(crate) fn jacobian_unchecked(&self, xi: &[f64]) -> Matrix {
        let d = self.d();
        let mut m = Matrix::identity(d, d);
        for i in 0..d {
            for j in i + 1..d {
                let c = self.c[(i, j)];
                if c != 0.0 {
                    let w = c / (xi[i] - xi[j]).powi(2);
                    m[(i, j)] = -w;
                    m[(j, i)] = -w;
                    m[(i, i)] += w;
                    m[(j, j)] += w;
                }
            }
        }
        m
    }
}

fn check_point(problem: &ImplicitProblem, xi: &[f64]) -> Result<()> {
    if xi.len() != problem.d() {
        return Err(Error::invalid(
            "xi",
            format!("expected length {}, got {}", problem.d(), xi.len()),
        ));
    }
    crate::chamber_min_gap(xi).map(|_| ())
}

/// `r_i = ξ_i − a_i − Σ_{j≠i} c_ij/(ξ_i − ξ_j)`.
pub fn residual(problem: &ImplicitProblem, xi: &[f64]) -> Result<Vec<f64>> {
    check_point(problem, xi)?;
    let mut r = vec![0.0; xi.len()];
    problem.residual_into(xi, &mut r);
    Ok(r)
}

/// The symmetric matrix `I − ∂g/∂ξ` at ξ.
pub fn jacobian(problem: &ImplicitProblem, xi: &[f64]) -> Result<Matrix> {
    check_point(problem, xi)?;
    Ok(problem.jacobian_unchecked(xi))
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Positive root of `x − 2c/x = s`, i.e. `½(s + √(s² + 8c))`, evaluated
/// without cancellation when `s < 0`.
pub(crate) fn pair_gap(s: f64, c: f64) -> f64 {
    positive_root(s, 8.0 * c)
}

/// `½(s + √(s² + q))` for `q > 0`, stable for negative `s`.
pub(crate) fn positive_root(s: f64, q: f64) -> f64 {
    let disc = (s * s + q).sqrt();
    if s >= 0.0 {
        0.5 * (s + disc)
    } else {
        0.5 * q / (disc - s)
    }
}

/// Consecutive gaps `x_i = ξ_{i+1} − ξ_i` together with `ξ_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapVector {
    pub x: Vec<f64>,
    pub anchor: f64,
}

impl GapVector {
    pub fn from_xi(xi: &[f64]) -> Result<Self> {
        crate::chamber_min_gap(xi)?;
        Ok(GapVector {
            x: xi.windows(2).map(|w| w[1] - w[0]).collect(),
            anchor: xi[0],
        })
    }

    /// Gaps of a solution of `problem`; the anchor follows from `mean ξ = mean a`.
    pub(crate) fn for_problem(problem: &ImplicitProblem, x: Vec<f64>) -> Self {
        let d = problem.d() as f64;
        let mut offset = 0.0;
        let mut sum = 0.0;
        for g in &x {
            offset += g;
            sum += offset;
        }
        GapVector {
            anchor: problem.mean_offset() - sum / d,
            x,
        }
    }

    pub fn to_xi(&self) -> Vec<f64> {
        let mut xi = Vec::with_capacity(self.x.len() + 1);
        let mut v = self.anchor;
        xi.push(v);
        for g in &self.x {
            v += g;
            xi.push(v);
        }
        xi
    }
}

/// Residual of the gap form of the system:
///
/// ```text
/// x_i = Δa_i + 2c_{i,i+1}/x_i + Σ_{j<i} ( c_{i+1,j}/(x_j+…+x_i) − c_{i,j}/(x_j+…+x_{i−1}) )
///                             − Σ_{j>i+1} ( c_{i+1,j}/(x_{i+1}+…+x_{j−1}) − c_{i,j}/(x_i+…+x_{j−1}) )
/// ```
///
/// with `Δa_i = a_{i+1} − a_i`. Returns `lhs − rhs` for `i = 1, …, d−1`.
pub fn gap_residual(problem: &ImplicitProblem, gaps: &[f64]) -> Result<Vec<f64>> {
    let d = problem.d();
    if gaps.len() + 1 != d {
        return Err(Error::invalid("gaps", format!("expected {} gaps", d - 1)));
    }
    if let Some((index, &gap)) = gaps.iter().enumerate().find(|(_, g)| !(**g > 0.0)) {
        return Err(Error::NotOrdered { index, gap });
    }
    // span(l, r) = x_l + … + x_r (0-based gap indices, inclusive).
    let span = |l: usize, r: usize| gaps[l..=r].iter().sum::<f64>();
    let c = &problem.c;
    let a = &problem.a;
    let mut out = Vec::with_capacity(d - 1);
    for i in 0..d - 1 {
        let mut rhs = a[i + 1] - a[i] + 2.0 * c[(i, i + 1)] / gaps[i];
        for j in 0..i {
            rhs += c[(i + 1, j)] / span(j, i) - c[(i, j)] / span(j, i - 1);
        }
        for j in i + 2..d {
            rhs -= c[(i + 1, j)] / span(i + 1, j - 1) - c[(i, j)] / span(i, j - 1);
        }
        out.push(gaps[i] - rhs);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Newton,
    Homotopy,
    FixedPointNn,
    AlternatingD3,
    /// Newton, falling back to homotopy.
    Auto,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Newton => "newton",
            Method::Homotopy => "homotopy",
            Method::FixedPointNn => "fixed_point_nn",
            Method::AlternatingD3 => "alternating_d3",
            Method::Auto => "auto",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "newton" => Method::Newton,
            "homotopy" => Method::Homotopy,
            "fixed_point_nn" => Method::FixedPointNn,
            "alternating_d3" => Method::AlternatingD3,
            "auto" => Method::Auto,
            other => return Err(Error::invalid("method", format!("unknown method {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    /// Target for the max-norm residual (Newton, homotopy) or the successive
    /// change (fixed-point iterations).
    pub tol: f64,
    pub max_iter: usize,
    pub homotopy_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Auto,
            tol: 1e-12,
            max_iter: 100,
            homotopy_steps: 64,
        }
    }
}

impl SolverOptions {
    pub fn with_method(method: Method) -> Self {
        SolverOptions {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid("tol", format!("must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be >= 1"));
        }
        if self.homotopy_steps == 0 {
            return Err(Error::invalid("homotopy_steps", "must be >= 1"));
        }
        Ok(())
    }
}

/// Root in `Δ_d` plus diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub xi: Vec<f64>,
    pub iterations: usize,
    /// Max-norm residual at `xi`.
    pub residual: f64,
    pub method: Method,
}

/// Solves with the requested method. `Auto` tries Newton and falls back to
/// homotopy; the structural iterations are only used when asked for and
/// their hypotheses hold. There is deliberately no alternating iteration for
/// `d ≥ 4`.
pub fn solve(problem: &ImplicitProblem, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    match opts.method {
        Method::Newton => solve_newton(problem, opts),
        Method::Homotopy => solve_homotopy(problem, opts),
        Method::FixedPointNn => {
            let sol = solve_fixed_point_nn(problem, opts)?;
            Ok(sol.into_report(problem, Method::FixedPointNn))
        }
        Method::AlternatingD3 => {
            let sol = solve_alternating_d3(problem, opts)?;
            Ok(sol.into_report(problem, Method::AlternatingD3))
        }
        Method::Auto => match solve_newton(problem, opts) {
            Ok(r) => Ok(r),
            Err(e) if e.is_non_convergence() => {
                let mut r = solve_homotopy(problem, opts)?;
                r.method = Method::Homotopy;
                Ok(r)
            }
            Err(e) => Err(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rng: &mut impl Rng, d: usize) -> ImplicitProblem {
        let a = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let c = rng.random_range(1e-4..10.0);
        ImplicitProblem::uniform(a, c).unwrap()
    }

    fn random_chamber_point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
        let mut x = vec![rng.random_range(-3.0..3.0)];
        for _ in 1..d {
            let gap = 10f64.powf(rng.random_range(-2.0..1.0));
            x.push(x.last().unwrap() + gap);
        }
        x
    }

    #[test]
    fn residual_examples() {
        let p = ImplicitProblem::uniform(vec![0.0, 3.0], 2.0).unwrap();
        let r = residual(&p, &[-0.5, 3.5]).unwrap();
        assert!(max_norm(&r) < 1e-15);
        let p = ImplicitProblem::uniform(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(residual(&p, &[-1.0, 1.0]).unwrap(), vec![-0.5, 0.5]);
    }

    #[test]
    fn residual_rejects_unordered() {
        let p = ImplicitProblem::uniform(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(residual(&p, &[1.0, 1.0]), Err(Error::NotOrdered { index: 0, .. })));
        assert!(jacobian(&p, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn jacobian_example() {
        let p = ImplicitProblem::uniform(vec![0.0, 0.0], 1.0).unwrap();
        let m = jacobian(&p, &[-1.0, 1.0]).unwrap();
        assert_eq!(m, Matrix::from_row_slice(2, 2, &[1.25, -0.25, -0.25, 1.25]));
        let tiny = ImplicitProblem::uniform(vec![0.0, 0.0], 1e-300).unwrap();
        let m = jacobian(&tiny, &[-1.0, 1.0]).unwrap();
        assert!((m - Matrix::identity(2, 2)).amax() < 1e-200);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..6 {
            let p = random_problem(&mut rng, d);
            let x = random_chamber_point(&mut rng, d);
            let m = jacobian(&p, &x).unwrap();
            let h = 1e-6;
            for j in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let rp = residual(&p, &xp).unwrap();
                let rm = residual(&p, &xm).unwrap();
                for i in 0..d {
                    let fd = (rp[i] - rm[i]) / (2.0 * h);
                    assert!((fd - m[(i, j)]).abs() < 1e-4 * (1.0 + m[(i, j)].abs()));
                }
            }
        }
    }

    #[test]
    fn jacobian_quadratic_form_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let d = rng.random_range(2..7);
            let p = random_problem(&mut rng, d);
            let x = random_chamber_point(&mut rng, d);
            let y: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = jacobian(&p, &x).unwrap();
            let my = &m * nalgebra::DVector::from_column_slice(&y);
            let lhs: f64 = my.iter().zip(&y).map(|(a, b)| a * b).sum();
            let mut rhs: f64 = y.iter().map(|v| v * v).sum();
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        rhs += 0.5 * p.c()[(i, j)] * (y[i] - y[j]).powi(2) / (x[i] - x[j]).powi(2);
                    }
                }
            }
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn jacobian_smallest_eigenvalue_at_least_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let d = rng.random_range(2..9);
            let p = random_problem(&mut rng, d);
            let x = random_chamber_point(&mut rng, d);
            let m = jacobian(&p, &x).unwrap();
            assert_eq!(m, m.transpose());
            let eig = SymmetricEigen::new(m.clone());
            let min = eig.eigenvalues.min();
            assert!(min >= 1.0 - 1e-9 * m.amax(), "min eigenvalue {min}");
        }
    }

    #[test]
    fn gap_form_matches_difference_of_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let d = rng.random_range(2..8);
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let c = Matrix::from_fn(d, d, |i, j| {
                if i == j {
                    0.0
                } else {
                    // Symmetric pseudo-random entries.
                    let (lo, hi) = (i.min(j), i.max(j));
                    0.1 + ((lo * 7 + hi * 13) % 5) as f64
                }
            });
            let p = ImplicitProblem::new(a, c).unwrap();
            let x = random_chamber_point(&mut rng, d);
            let r = residual(&p, &x).unwrap();
            let gaps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let gr = gap_residual(&p, &gaps).unwrap();
            for i in 0..d - 1 {
                let expect = r[i + 1] - r[i];
                assert!((gr[i] - expect).abs() < 1e-9 * (1.0 + expect.abs()), "{} vs {}", gr[i], expect);
            }
        }
    }

    #[test]
    fn gap_vector_round_trip() {
        let xi = vec![-1.5, -0.25, 2.0, 2.5];
        let g = GapVector::from_xi(&xi).unwrap();
        assert_eq!(g.anchor, -1.5);
        let back = g.to_xi();
        for (a, b) in back.iter().zip(&xi) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(GapVector::from_xi(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn pair_gap_is_stable() {
        // Positive root of x − 2c/x = s for very negative s: x ≈ 2c/|s|.
        let g = pair_gap(-1e8, 1.0);
        assert!((g - 2e-8).abs() / 2e-8 < 1e-12);
        let g = pair_gap(0.0, 1.0);
        assert!((g - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Newton, Method::Homotopy, Method::FixedPointNn, Method::AlternatingD3, Method::Auto] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bisection".parse::<Method>().is_err());
    }

    #[test]
    fn problem_validation() {
        assert!(ImplicitProblem::uniform(vec![0.0], 1.0).is_err());
        assert!(ImplicitProblem::uniform(vec![0.0, 1.0], 0.0).is_err());
        assert!(ImplicitProblem::uniform(vec![0.0, f64::NAN], 1.0).is_err());
        assert!(ImplicitProblem::tridiagonal(vec![0.0, 1.0, 2.0], &[1.0]).is_err());
        let t = ImplicitProblem::tridiagonal(vec![0.0, 1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!(t.is_tridiagonal());
        assert_eq!(t.uniform_coefficient(), None);
        assert_eq!(t.c()[(2, 1)], 2.0);
    }

    #[test]
    fn auto_solves_random_five_particle_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
            let p = ImplicitProblem::uniform(a, 0.3).unwrap();
            let r = solve(&p, &SolverOptions::default()).unwrap();
            assert!(r.residual <= 1e-12);
            assert!(crate::in_chamber(&r.xi));
            assert!(max_norm(&residual(&p, &r.xi).unwrap()) <= 1e-12);
        }
    }

    #[test]
    fn near_collision_is_resolved() {
        let p = ImplicitProblem::uniform(vec![0.0, 1e-6], 1e-8).unwrap();
        let r = solve(&p, &SolverOptions::default()).unwrap();
        let gap = r.xi[1] - r.xi[0];
        assert!(gap >= (2e-8f64).sqrt() * (1.0 - 1e-6), "gap {gap}");
        let exact = 0.5 * (1e-6 + (1e-12f64 + 8e-8).sqrt());
        assert!((gap - exact).abs() < 1e-12);
    }

    #[test]
    fn structural_methods_check_preconditions() {
        let full = ImplicitProblem::uniform(vec![0.0, 0.5, 1.0, 1.5], 1.0).unwrap();
        for m in [Method::FixedPointNn, Method::AlternatingD3] {
            let err = solve(&full, &SolverOptions::with_method(m)).unwrap_err();
            assert!(matches!(err, Error::StructureMismatch { .. }), "{m}: {err}");
        }
        let bad = SolverOptions { tol: 0.0, ..Default::default() };
        assert!(solve(&full, &bad).is_err());
    }

    proptest! {
        #[test]
        fn solution_is_shift_equivariant(
            a in proptest::collection::vec(-5.0f64..5.0, 2..7),
            c in 1e-3f64..10.0,
            s in -50.0f64..50.0,
        ) {
            let p = ImplicitProblem::uniform(a, c).unwrap();
            let opts = SolverOptions::default();
            let base = solve(&p, &opts).unwrap();
            let moved = solve(&p.shifted(s), &opts).unwrap();
            for (u, v) in base.xi.iter().zip(&moved.xi) {
                prop_assert!((u + s - v).abs() <= 1e-10 * (1.0 + s.abs()));
            }
        }

        #[test]
        fn output_is_strictly_ordered(
            a in proptest::collection::vec(-5.0f64..5.0, 2..9),
            c in 1e-4f64..10.0,
        ) {
            let p = ImplicitProblem::uniform(a, c).unwrap();
            let r = solve(&p, &SolverOptions::default()).unwrap();
            prop_assert!(crate::in_chamber(&r.xi));
            prop_assert!(r.residual <= 1e-12);
        }
    }
}
