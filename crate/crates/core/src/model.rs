//! Particle systems, coefficient families and the parameter conditions under
//! which the process stays in the Weyl chamber with bounded inverse moments.
//!
//! Drift and diffusion come from closed parametric families so that the
//! Lipschitz constants and `σ_d² = sup_i sup_x Σ_k σ_ik(x)²` are known exactly.
//! Each family also has a `Custom` variant whose declared constants are
//! trusted as given.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Full-vector drift evaluator: writes `b(x)` into the output slice.
pub type DriftFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Diffusion evaluator: writes `σ(x)` into the `d × d` output matrix.
pub type DiffusionFn = dyn Fn(&[f64], &mut Matrix) + Send + Sync;

#[derive(Clone)]
pub struct CustomDrift {
    eval: Arc<DriftFn>,
    lipschitz: f64,
}

impl CustomDrift {
    /// `lipschitz` is the caller's claim for `‖b‖_Lip`; it is not verified.
    pub fn new(eval: Arc<DriftFn>, lipschitz: f64) -> Self {
        CustomDrift { eval, lipschitz }
    }
}

impl fmt::Debug for CustomDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDrift")
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

#[derive(Clone)]
pub struct CustomDiffusion {
    eval: Arc<DiffusionFn>,
    sigma_sup_sq: f64,
    lipschitz: f64,
}

impl CustomDiffusion {
    /// The declared `σ_d²` and `‖σ‖_Lip` are trusted, not verified.
    pub fn new(eval: Arc<DiffusionFn>, sigma_sup_sq: f64, lipschitz: f64) -> Self {
        CustomDiffusion {
            eval,
            sigma_sup_sq,
            lipschitz,
        }
    }
}

impl fmt::Debug for CustomDiffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDiffusion")
            .field("sigma_sup_sq", &self.sigma_sup_sq)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

/// Drift coefficient `b(x)`.
#[derive(Clone, Debug)]
pub enum DriftSpec {
    Zero,
    /// `b_i(x) = c_i` with `c_1 ≤ … ≤ c_d`.
    Constant(Vec<f64>),
    /// `b_i(x) = θ (μ_i − x_i)` with `θ ≥ 0` and `μ` non-decreasing.
    OrnsteinUhlenbeck { theta: f64, mu: Vec<f64> },
    /// `b_i(x) = β tanh(x_i)`.
    BoundedSmooth { beta: f64 },
    Custom(CustomDrift),
}

impl PartialEq for DriftSpec {
    fn eq(&self, other: &Self) -> bool {
        use DriftSpec::*;
        match (self, other) {
            (Zero, Zero) => true,
            (Constant(a), Constant(b)) => a == b,
            (
                OrnsteinUhlenbeck { theta: t1, mu: m1 },
                OrnsteinUhlenbeck { theta: t2, mu: m2 },
            ) => t1 == t2 && m1 == m2,
            (BoundedSmooth { beta: a }, BoundedSmooth { beta: b }) => a == b,
            (Custom(a), Custom(b)) => Arc::ptr_eq(&a.eval, &b.eval) && a.lipschitz == b.lipschitz,
            _ => false,
        }
    }
}

impl DriftSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            DriftSpec::Zero => Ok(()),
            DriftSpec::Constant(c) => {
                check_len("drift.c", c, d)?;
                check_non_decreasing("drift.c", c)
            }
            DriftSpec::OrnsteinUhlenbeck { theta, mu } => {
                if !(theta.is_finite() && *theta >= 0.0) {
                    return Err(Error::invalid("drift.theta", format!("must be finite and >= 0, got {theta}")));
                }
                check_len("drift.mu", mu, d)?;
                check_non_decreasing("drift.mu", mu)
            }
            DriftSpec::BoundedSmooth { beta } => {
                if !beta.is_finite() {
                    return Err(Error::invalid("drift.beta", "must be finite"));
                }
                Ok(())
            }
            DriftSpec::Custom(c) => {
                if !(c.lipschitz.is_finite() && c.lipschitz >= 0.0) {
                    return Err(Error::invalid("drift.lipschitz", "must be finite and >= 0"));
                }
                Ok(())
            }
        }
    }

    /// Writes `b(x)` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            DriftSpec::Zero => out.fill(0.0),
            DriftSpec::Constant(c) => out.copy_from_slice(c),
            DriftSpec::OrnsteinUhlenbeck { theta, mu } => {
                for ((o, m), xi) in out.iter_mut().zip(mu).zip(x) {
                    *o = theta * (m - xi);
                }
            }
            DriftSpec::BoundedSmooth { beta } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = beta * xi.tanh();
                }
            }
            DriftSpec::Custom(c) => (c.eval)(x, out),
        }
    }

    /// `(b_1(x), …, b_d(x))`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// The scalar map `z ↦ b_i(z)` for coordinate-wise families; `None` for custom drifts.
    pub fn component(&self, i: usize, z: f64) -> Option<f64> {
        match self {
            DriftSpec::Zero => Some(0.0),
            DriftSpec::Constant(c) => Some(c[i]),
            DriftSpec::OrnsteinUhlenbeck { theta, mu } => Some(theta * (mu[i] - z)),
            DriftSpec::BoundedSmooth { beta } => Some(beta * z.tanh()),
            DriftSpec::Custom(_) => None,
        }
    }

    pub fn is_coordinatewise(&self) -> bool {
        !matches!(self, DriftSpec::Custom(_))
    }

    /// `‖b‖_Lip`, exact for the parametric families.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            DriftSpec::Zero | DriftSpec::Constant(_) => 0.0,
            DriftSpec::OrnsteinUhlenbeck { theta, .. } => *theta,
            DriftSpec::BoundedSmooth { beta } => beta.abs(),
            DriftSpec::Custom(c) => c.lipschitz,
        }
    }
}

/// Diffusion coefficient `σ(x)`.
#[derive(Clone, Debug)]
pub enum DiffusionSpec {
    ConstantMatrix(Matrix),
    /// `σ_ii(x) = s0 + s1 tanh(x_i)`, zero off the diagonal.
    DiagonalBounded { s0: f64, s1: f64 },
    Custom(CustomDiffusion),
}

impl PartialEq for DiffusionSpec {
    fn eq(&self, other: &Self) -> bool {
        use DiffusionSpec::*;
        match (self, other) {
            (ConstantMatrix(a), ConstantMatrix(b)) => a == b,
            (DiagonalBounded { s0: a0, s1: a1 }, DiagonalBounded { s0: b0, s1: b1 }) => {
                a0 == b0 && a1 == b1
            }
            (Custom(a), Custom(b)) => {
                Arc::ptr_eq(&a.eval, &b.eval)
                    && a.sigma_sup_sq == b.sigma_sup_sq
                    && a.lipschitz == b.lipschitz
            }
            _ => false,
        }
    }
}

impl DiffusionSpec {
    pub fn identity(d: usize) -> Self {
        DiffusionSpec::ConstantMatrix(Matrix::identity(d, d))
    }

    /// `σ ≡ 0`. Violates no assumption the implicit step needs; used for
    /// deterministic checks.
    pub fn zero(d: usize) -> Self {
        DiffusionSpec::ConstantMatrix(Matrix::zeros(d, d))
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            DiffusionSpec::ConstantMatrix(m) => {
                if m.nrows() != d || m.ncols() != d {
                    return Err(Error::invalid(
                        "diffusion.sigma",
                        format!("expected {d}x{d}, got {}x{}", m.nrows(), m.ncols()),
                    ));
                }
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("diffusion.sigma", "entries must be finite"));
                }
                Ok(())
            }
            DiffusionSpec::DiagonalBounded { s0, s1 } => {
                if !(s0.is_finite() && *s0 > 0.0) {
                    return Err(Error::invalid("diffusion.s0", format!("must be > 0, got {s0}")));
                }
                if !(s1.is_finite() && *s1 >= 0.0) {
                    return Err(Error::invalid("diffusion.s1", format!("must be >= 0, got {s1}")));
                }
                Ok(())
            }
            DiffusionSpec::Custom(c) => {
                if !(c.sigma_sup_sq.is_finite() && c.sigma_sup_sq >= 0.0) {
                    return Err(Error::invalid("diffusion.sigma_sup_sq", "must be finite and >= 0"));
                }
                if !(c.lipschitz.is_finite() && c.lipschitz >= 0.0) {
                    return Err(Error::invalid("diffusion.lipschitz", "must be finite and >= 0"));
                }
                Ok(())
            }
        }
    }

    /// The matrix `(σ_ij(x))`.
    pub fn eval(&self, x: &[f64]) -> Matrix {
        let d = x.len();
        match self {
            DiffusionSpec::ConstantMatrix(m) => m.clone(),
            DiffusionSpec::DiagonalBounded { s0, s1 } => {
                Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    d,
                    x.iter().map(|xi| s0 + s1 * xi.tanh()),
                ))
            }
            DiffusionSpec::Custom(c) => {
                let mut m = Matrix::zeros(d, d);
                (c.eval)(x, &mut m);
                m
            }
        }
    }

    /// Writes `σ(x) dw` into `out` without materialising the matrix where possible.
    pub fn apply_into(&self, x: &[f64], dw: &[f64], out: &mut [f64]) {
        match self {
            DiffusionSpec::ConstantMatrix(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = m.row(i).iter().zip(dw).map(|(s, w)| s * w).sum();
                }
            }
            DiffusionSpec::DiagonalBounded { s0, s1 } => {
                for ((o, xi), w) in out.iter_mut().zip(x).zip(dw) {
                    *o = (s0 + s1 * xi.tanh()) * w;
                }
            }
            DiffusionSpec::Custom(_) => {
                let m = self.eval(x);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = m.row(i).iter().zip(dw).map(|(s, w)| s * w).sum();
                }
            }
        }
    }

    /// `σ_d² = sup_i sup_x Σ_k σ_ik(x)²`.
    pub fn sigma_sup_sq(&self) -> f64 {
        match self {
            DiffusionSpec::ConstantMatrix(m) => m
                .row_iter()
                .map(|r| r.iter().map(|v| v * v).sum::<f64>())
                .fold(0.0, f64::max),
            DiffusionSpec::DiagonalBounded { s0, s1 } => (s0 + s1).powi(2),
            DiffusionSpec::Custom(c) => c.sigma_sup_sq,
        }
    }

    /// `‖σ‖_Lip`.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            DiffusionSpec::ConstantMatrix(_) => 0.0,
            DiffusionSpec::DiagonalBounded { s1, .. } => *s1,
            DiffusionSpec::Custom(c) => c.lipschitz,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DiffusionSpec::ConstantMatrix(m) if m.iter().all(|v| *v == 0.0))
    }
}

/// A particle system together with its initial configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSystem {
    d: usize,
    gamma: Matrix,
    drift: DriftSpec,
    diffusion: DiffusionSpec,
    x0: Vec<f64>,
}

impl ParticleSystem {
    pub fn new(
        gamma: Matrix,
        drift: DriftSpec,
        diffusion: DiffusionSpec,
        x0: Vec<f64>,
    ) -> Result<Self> {
        let d = x0.len();
        if d < 2 {
            return Err(Error::invalid("d", format!("need at least 2 particles, got {d}")));
        }
        validate_interaction("gamma", &gamma, d)?;
        drift.validate(d)?;
        diffusion.validate(d)?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("x0", "entries must be finite"));
        }
        if let Err(Error::NotOrdered { index, gap }) = crate::chamber_min_gap(&x0) {
            return Err(Error::invalid(
                "x0",
                format!("must be strictly increasing (gap {index} is {gap})"),
            ));
        }
        Ok(ParticleSystem {
            d,
            gamma,
            drift,
            diffusion,
            x0,
        })
    }

    /// Dyson-type system: uniform repulsion `γ`, no drift, `σ = I`.
    pub fn dyson(gamma: f64, x0: Vec<f64>) -> Result<Self> {
        let d = x0.len();
        ParticleSystem::new(
            uniform_matrix(d, gamma),
            DriftSpec::Zero,
            DiffusionSpec::identity(d),
            x0,
        )
    }

    pub fn with_drift(mut self, drift: DriftSpec) -> Result<Self> {
        drift.validate(self.d)?;
        self.drift = drift;
        Ok(self)
    }

    pub fn with_diffusion(mut self, diffusion: DiffusionSpec) -> Result<Self> {
        diffusion.validate(self.d)?;
        self.diffusion = diffusion;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gamma(&self) -> &Matrix {
        &self.gamma
    }

    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }

    pub fn diffusion(&self) -> &DiffusionSpec {
        &self.diffusion
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// `Some(γ)` when every off-diagonal entry equals `γ`.
    pub fn uniform_gamma(&self) -> Option<f64> {
        let g = self.gamma[(0, 1)];
        let uniform = (0..self.d)
            .flat_map(|i| (0..self.d).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .all(|(i, j)| self.gamma[(i, j)] == g);
        uniform.then_some(g)
    }

    /// `Some(γ)` when `γ` sits on the first off-diagonals only, with a common value.
    pub fn nearest_neighbor_gamma(&self) -> Option<f64> {
        let g = self.gamma[(0, 1)];
        for i in 0..self.d {
            for j in 0..self.d {
                let expected = if i.abs_diff(j) == 1 { g } else { 0.0 };
                if self.gamma[(i, j)] != expected {
                    return None;
                }
            }
        }
        Some(g)
    }
}

/// Symmetric matrix with `value` everywhere off the diagonal.
pub fn uniform_matrix(d: usize, value: f64) -> Matrix {
    Matrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { value })
}

/// Symmetric matrix with `value` on the first off-diagonals only.
pub fn tridiagonal_matrix(d: usize, value: f64) -> Matrix {
    Matrix::from_fn(d, d, |i, j| if i.abs_diff(j) == 1 { value } else { 0.0 })
}

/// `d` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![lo];
    }
    (0..d)
        .map(|i| lo + (hi - lo) * i as f64 / (d - 1) as f64)
        .collect()
}

/// Checks the hypotheses shared by `γ` and the implicit-step coefficients:
/// square `d × d`, symmetric, zero diagonal, non-negative, positive on the
/// first off-diagonals.
pub(crate) fn validate_interaction(what: &'static str, m: &Matrix, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::invalid(
            what,
            format!("expected {d}x{d}, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    for i in 0..d {
        if m[(i, i)] != 0.0 {
            return Err(Error::invalid(what, format!("diagonal entry {i} must be 0")));
        }
        for j in 0..d {
            let v = m[(i, j)];
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(what, format!("entry ({i},{j}) must be finite and >= 0")));
            }
            if v != m[(j, i)] {
                return Err(Error::invalid(what, format!("not symmetric at ({i},{j})")));
            }
        }
        if i + 1 < d && m[(i, i + 1)] <= 0.0 {
            return Err(Error::invalid(
                what,
                format!("entry ({i},{}) must be > 0", i + 1),
            ));
        }
    }
    Ok(())
}

fn check_len(what: &'static str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::invalid(what, format!("expected length {d}, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(what, "entries must be finite"));
    }
    Ok(())
}

fn check_non_decreasing(what: &'static str, v: &[f64]) -> Result<()> {
    if v.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid(what, "must be non-decreasing"));
    }
    Ok(())
}

/// One inequality of a parameter condition, with both sides exposed.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub label: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn at_least(label: &'static str, lhs: f64, rhs: f64) -> Self {
        Inequality {
            label,
            lhs,
            rhs,
            holds: lhs >= rhs,
        }
    }

    fn at_most(label: &'static str, lhs: f64, rhs: f64) -> Self {
        Inequality {
            label,
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub condition: &'static str,
    pub inequalities: Vec<Inequality>,
}

impl ConditionReport {
    pub fn satisfied(&self) -> bool {
        self.inequalities.iter().all(|i| i.holds)
    }
}

/// Non-collision and `p`-th moment condition for uniform interaction `γ`:
/// `3γ/(dσ_d²) ≥ 2` and `p ≤ 3γ/(dσ_d²) − 1`.
pub fn check_full_interaction_condition(system: &ParticleSystem, p: f64) -> Result<ConditionReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("must be >= 1, got {p}")));
    }
    let gamma = system
        .uniform_gamma()
        .ok_or(Error::StructureMismatch { expected: "uniform gamma" })?;
    require_coordinatewise(system)?;
    let ratio = 3.0 * gamma / (system.d as f64 * system.diffusion.sigma_sup_sq());
    Ok(ConditionReport {
        condition: "full_interaction",
        inequalities: vec![
            Inequality::at_least("3*gamma/(d*sigma_d^2) >= 2", ratio, 2.0),
            Inequality::at_most("p <= 3*gamma/(d*sigma_d^2) - 1", p, ratio - 1.0),
        ],
    })
}

/// Nearest-neighbour condition `γ/(2σ_d²) ≥ (p+1)/(2 − χ)` where `χ` is the
/// gap-inequality constant for `(d, p)`.
pub fn check_nn_condition(system: &ParticleSystem, p: f64, chi: f64) -> Result<ConditionReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("must be >= 1, got {p}")));
    }
    if !(chi < 2.0) {
        return Err(Error::invalid("chi", format!("must be < 2, got {chi}")));
    }
    let gamma = system
        .nearest_neighbor_gamma()
        .ok_or(Error::StructureMismatch { expected: "tridiagonal gamma" })?;
    require_coordinatewise(system)?;
    let lhs = gamma / (2.0 * system.diffusion.sigma_sup_sq());
    let rhs = (p + 1.0) / (2.0 - chi);
    Ok(ConditionReport {
        condition: "nearest_neighbor",
        inequalities: vec![Inequality::at_least(
            "gamma/(2*sigma_d^2) >= (p+1)/(2-chi)",
            lhs,
            rhs,
        )],
    })
}

fn require_coordinatewise(system: &ParticleSystem) -> Result<()> {
    if system.drift.is_coordinatewise() {
        Ok(())
    } else {
        Err(Error::StructureMismatch {
            expected: "coordinate-wise drift",
        })
    }
}
