//! Experiment configuration files.
//!
//! ```toml
//! [system]
//! d = 3
//! gamma = "uniform: 4"          # or "tridiagonal: 4" / "tridiagonal: 1, 2" / rows
//! x0 = "linspace: -1, 1"        # or [-1.0, 0.0, 1.0]
//!
//! [system.drift]                # optional, default zero
//! kind = "bounded_smooth"
//! beta = 1.0
//!
//! [system.diffusion]            # optional, default identity
//! kind = "diagonal_bounded"
//! s0 = 0.8
//! s1 = 0.2
//!
//! [run]
//! seed = 7                      # mandatory
//! T = 1.0
//! n = 64
//! levels = [16, 32, 64]
//! ref_level = 1024
//! paths = 1000
//! error_mode = "grid_sup_lp"
//! p = 1.0
//!
//! [output]
//! path = "out.csv"
//! precision = 17
//! ```
//!
//! Every validation failure names the offending key.

use std::fmt;

use serde::{Deserialize, Serialize};

use noncollide::analysis::ErrorMode;
use noncollide::model::{linspace, tridiagonal_matrix, uniform_matrix, Matrix};
use noncollide::{DiffusionSpec, DriftSpec, Method, ParticleSystem, Scheme};

use crate::values::{self, Coefficients};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigError {
    /// The text is not valid TOML or does not have the expected shape.
    Parse { line: usize, column: usize, message: String },
    /// A value is present but unacceptable; `key` is its dotted path.
    Semantic { key: String, message: String },
}

impl ConfigError {
    fn semantic(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Semantic {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Dotted key path for semantic errors.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Semantic { key, .. } => Some(key),
            ConfigError::Parse { .. } => None,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, column, message } => {
                write!(f, "line {line}, column {column}: {message}")
            }
            ConfigError::Semantic { key, message } => write!(f, "{key}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

// ---------------------------------------------------------------------------
// Validated configuration

#[derive(Clone, Debug, PartialEq)]
pub enum GammaSpec {
    Uniform(f64),
    /// Edge weights `γ_{i,i+1}`; a single value applies to every edge.
    Tridiagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Values(Vec<f64>),
    Linspace { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum DriftConfig {
    Zero,
    Constant(Vec<f64>),
    OrnsteinUhlenbeck { theta: f64, mu: Vec<f64> },
    BoundedSmooth { beta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiffusionConfig {
    Identity,
    Zero,
    Constant(Vec<Vec<f64>>),
    DiagonalBounded { s0: f64, s1: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub d: usize,
    pub gamma: GammaSpec,
    pub x0: InitialState,
    pub drift: DriftConfig,
    pub diffusion: DiffusionConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorModeName {
    GridSupLp,
    TerminalL2,
    GridSupL2,
}

impl ErrorModeName {
    fn name(self) -> &'static str {
        match self {
            ErrorModeName::GridSupLp => "grid_sup_lp",
            ErrorModeName::TerminalL2 => "terminal_l2",
            ErrorModeName::GridSupL2 => "grid_sup_l2",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "grid_sup_lp" => Some(ErrorModeName::GridSupLp),
            "terminal_l2" => Some(ErrorModeName::TerminalL2),
            "grid_sup_l2" => Some(ErrorModeName::GridSupL2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub horizon: f64,
    pub n: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub ref_level: Option<usize>,
    pub paths: usize,
    pub seed: u64,
    pub error_mode: ErrorModeName,
    pub p: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub method: Method,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: None,
            precision: 17,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
}

impl SystemConfig {
    pub fn gamma_matrix(&self) -> Matrix {
        let d = self.d;
        match &self.gamma {
            GammaSpec::Uniform(g) => uniform_matrix(d, *g),
            GammaSpec::Tridiagonal(edges) if edges.len() == 1 => tridiagonal_matrix(d, edges[0]),
            GammaSpec::Tridiagonal(edges) => {
                let mut m = Matrix::zeros(d, d);
                for (i, &e) in edges.iter().enumerate() {
                    m[(i, i + 1)] = e;
                    m[(i + 1, i)] = e;
                }
                m
            }
            GammaSpec::Full(rows) => Matrix::from_fn(d, d, |i, j| rows[i][j]),
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match &self.x0 {
            InitialState::Values(v) => v.clone(),
            InitialState::Linspace { lo, hi } => linspace(*lo, *hi, self.d),
        }
    }

    pub fn build(&self) -> std::result::Result<ParticleSystem, noncollide::Error> {
        let d = self.d;
        let drift = match &self.drift {
            DriftConfig::Zero => DriftSpec::Zero,
            DriftConfig::Constant(c) => DriftSpec::Constant(c.clone()),
            DriftConfig::OrnsteinUhlenbeck { theta, mu } => DriftSpec::OrnsteinUhlenbeck {
                theta: *theta,
                mu: mu.clone(),
            },
            DriftConfig::BoundedSmooth { beta } => DriftSpec::BoundedSmooth { beta: *beta },
        };
        let diffusion = match &self.diffusion {
            DiffusionConfig::Identity => DiffusionSpec::identity(d),
            DiffusionConfig::Zero => DiffusionSpec::zero(d),
            DiffusionConfig::Constant(rows) => {
                DiffusionSpec::ConstantMatrix(Matrix::from_fn(d, d, |i, j| rows[i][j]))
            }
            DiffusionConfig::DiagonalBounded { s0, s1 } => DiffusionSpec::DiagonalBounded { s0: *s0, s1: *s1 },
        };
        ParticleSystem::new(self.gamma_matrix(), drift, diffusion, self.initial_state())
    }
}

impl RunConfig {
    pub fn error_mode(&self) -> ErrorMode {
        match self.error_mode {
            ErrorModeName::GridSupLp => ErrorMode::GridSupLp(self.p.unwrap_or(1.0)),
            ErrorModeName::TerminalL2 => ErrorMode::TerminalL2,
            ErrorModeName::GridSupL2 => ErrorMode::GridSupL2,
        }
    }
}

// ---------------------------------------------------------------------------
// Serialized shape

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    system: Option<RawSystem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<RawRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum RawMatrix {
    Text(String),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum RawVector {
    Text(String),
    Values(Vec<f64>),
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<RawMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x0: Option<RawVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift: Option<RawDrift>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diffusion: Option<RawDiffusion>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDrift {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDiffusion {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s1: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<String>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ref_level: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    paths: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision: Option<i64>,
}

// ---------------------------------------------------------------------------
// Parsing

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = offset - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| ConfigError::semantic(key, "missing required key"))
}

fn finite(v: f64, key: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::semantic(key, format!("must be finite, got {v}")))
    }
}

fn positive_count(v: i64, key: &str) -> Result<usize> {
    usize::try_from(v)
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| ConfigError::semantic(key, format!("must be a positive integer, got {v}")))
}

fn dyadic(v: i64, key: &str, what: &str) -> Result<usize> {
    let n = positive_count(v, key)?;
    if n.is_power_of_two() {
        Ok(n)
    } else {
        Err(ConfigError::semantic(key, format!("{what} must be powers of 2, got {n}")))
    }
}

fn check_vector(v: &[f64], d: usize, key: &str) -> Result<()> {
    if v.len() != d {
        return Err(ConfigError::semantic(key, format!("expected {d} values, got {}", v.len())));
    }
    for &x in v {
        finite(x, key)?;
    }
    Ok(())
}

fn check_rows(rows: &[Vec<f64>], d: usize, key: &str) -> Result<()> {
    if rows.len() != d {
        return Err(ConfigError::semantic(key, format!("expected {d} rows, got {}", rows.len())));
    }
    for row in rows {
        check_vector(row, d, key)?;
    }
    Ok(())
}

fn parse_gamma(raw: RawMatrix, d: usize) -> Result<GammaSpec> {
    const KEY: &str = "system.gamma";
    match raw {
        RawMatrix::Rows(rows) => {
            check_rows(&rows, d, KEY)?;
            Ok(GammaSpec::Full(rows))
        }
        RawMatrix::Text(text) => {
            let parsed = values::parse_coefficients(&text).map_err(|e| ConfigError::semantic(KEY, e.to_string()))?;
            let spec = match parsed {
                Coefficients::Uniform(g) => GammaSpec::Uniform(g),
                Coefficients::Tridiagonal(edges) => {
                    if edges.len() != 1 && edges.len() + 1 != d {
                        return Err(ConfigError::semantic(
                            KEY,
                            format!("tridiagonal needs 1 or {} edge values, got {}", d - 1, edges.len()),
                        ));
                    }
                    GammaSpec::Tridiagonal(edges)
                }
                Coefficients::Full(rows) => {
                    check_rows(&rows, d, KEY)?;
                    GammaSpec::Full(rows)
                }
            };
            Ok(spec)
        }
    }
}

fn parse_x0(raw: RawVector, d: usize) -> Result<InitialState> {
    const KEY: &str = "system.x0";
    match raw {
        RawVector::Values(v) => {
            check_vector(&v, d, KEY)?;
            Ok(InitialState::Values(v))
        }
        RawVector::Text(text) => {
            let (head, rest) = text
                .split_once(':')
                .ok_or_else(|| ConfigError::semantic(KEY, "expected a list or \"linspace: lo, hi\""))?;
            if head.trim() != "linspace" {
                return Err(ConfigError::semantic(KEY, format!("unknown form {:?}", head.trim())));
            }
            let v = values::parse_vector(rest).map_err(|e| ConfigError::semantic(KEY, e.to_string()))?;
            match v[..] {
                [lo, hi] if lo < hi => Ok(InitialState::Linspace { lo, hi }),
                [_, _] => Err(ConfigError::semantic(KEY, "linspace needs lo < hi")),
                _ => Err(ConfigError::semantic(KEY, "linspace takes exactly two values")),
            }
        }
    }
}

fn parse_drift(raw: Option<RawDrift>, d: usize) -> Result<DriftConfig> {
    let Some(raw) = raw else { return Ok(DriftConfig::Zero) };
    let kind = required(raw.kind, "system.drift.kind")?;
    let unused = |present: bool, key: &str| -> Result<()> {
        if present {
            Err(ConfigError::semantic(key, format!("not used by drift kind {kind:?}")))
        } else {
            Ok(())
        }
    };
    let drift = match kind.as_str() {
        "zero" => {
            unused(raw.c.is_some(), "system.drift.c")?;
            unused(raw.theta.is_some(), "system.drift.theta")?;
            unused(raw.mu.is_some(), "system.drift.mu")?;
            unused(raw.beta.is_some(), "system.drift.beta")?;
            DriftConfig::Zero
        }
        "constant" => {
            unused(raw.theta.is_some(), "system.drift.theta")?;
            unused(raw.mu.is_some(), "system.drift.mu")?;
            unused(raw.beta.is_some(), "system.drift.beta")?;
            let c = required(raw.c, "system.drift.c")?;
            check_vector(&c, d, "system.drift.c")?;
            DriftConfig::Constant(c)
        }
        "ornstein_uhlenbeck" => {
            unused(raw.c.is_some(), "system.drift.c")?;
            unused(raw.beta.is_some(), "system.drift.beta")?;
            let theta = finite(required(raw.theta, "system.drift.theta")?, "system.drift.theta")?;
            let mu = required(raw.mu, "system.drift.mu")?;
            check_vector(&mu, d, "system.drift.mu")?;
            DriftConfig::OrnsteinUhlenbeck { theta, mu }
        }
        "bounded_smooth" => {
            unused(raw.c.is_some(), "system.drift.c")?;
            unused(raw.theta.is_some(), "system.drift.theta")?;
            unused(raw.mu.is_some(), "system.drift.mu")?;
            let beta = finite(required(raw.beta, "system.drift.beta")?, "system.drift.beta")?;
            DriftConfig::BoundedSmooth { beta }
        }
        other => {
            return Err(ConfigError::semantic(
                "system.drift.kind",
                format!("unknown kind {other:?}; expected zero, constant, ornstein_uhlenbeck or bounded_smooth"),
            ))
        }
    };
    Ok(drift)
}

fn parse_diffusion(raw: Option<RawDiffusion>, d: usize) -> Result<DiffusionConfig> {
    let Some(raw) = raw else { return Ok(DiffusionConfig::Identity) };
    let kind = required(raw.kind, "system.diffusion.kind")?;
    let unused = |present: bool, key: &str| -> Result<()> {
        if present {
            Err(ConfigError::semantic(key, format!("not used by diffusion kind {kind:?}")))
        } else {
            Ok(())
        }
    };
    let diffusion = match kind.as_str() {
        "identity" | "zero" => {
            unused(raw.sigma.is_some(), "system.diffusion.sigma")?;
            unused(raw.s0.is_some(), "system.diffusion.s0")?;
            unused(raw.s1.is_some(), "system.diffusion.s1")?;
            if kind == "zero" {
                DiffusionConfig::Zero
            } else {
                DiffusionConfig::Identity
            }
        }
        "constant" => {
            unused(raw.s0.is_some(), "system.diffusion.s0")?;
            unused(raw.s1.is_some(), "system.diffusion.s1")?;
            let sigma = required(raw.sigma, "system.diffusion.sigma")?;
            check_rows(&sigma, d, "system.diffusion.sigma")?;
            DiffusionConfig::Constant(sigma)
        }
        "diagonal_bounded" => {
            unused(raw.sigma.is_some(), "system.diffusion.sigma")?;
            let s0 = finite(required(raw.s0, "system.diffusion.s0")?, "system.diffusion.s0")?;
            let s1 = finite(raw.s1.unwrap_or(0.0), "system.diffusion.s1")?;
            DiffusionConfig::DiagonalBounded { s0, s1 }
        }
        other => {
            return Err(ConfigError::semantic(
                "system.diffusion.kind",
                format!("unknown kind {other:?}; expected identity, zero, constant or diagonal_bounded"),
            ))
        }
    };
    Ok(diffusion)
}

fn parse_system(raw: Option<RawSystem>) -> Result<SystemConfig> {
    let raw = required(raw, "system")?;
    let d = positive_count(required(raw.d, "system.d")?, "system.d")?;
    if d < 2 {
        return Err(ConfigError::semantic("system.d", format!("must be at least 2, got {d}")));
    }
    let system = SystemConfig {
        d,
        gamma: parse_gamma(required(raw.gamma, "system.gamma")?, d)?,
        x0: parse_x0(required(raw.x0, "system.x0")?, d)?,
        drift: parse_drift(raw.drift, d)?,
        diffusion: parse_diffusion(raw.diffusion, d)?,
    };
    // Model-level checks (symmetry, ordering, parameter ranges).
    system.build().map_err(|e| match e {
        noncollide::Error::Invalid { what, reason } => ConfigError::semantic(format!("system.{what}"), reason),
        noncollide::Error::NotOrdered { .. } => ConfigError::semantic("system.x0", e.to_string()),
        other => ConfigError::semantic("system", other.to_string()),
    })?;
    Ok(system)
}

fn parse_run(raw: Option<RawRun>, seed_override: Option<u64>) -> Result<RunConfig> {
    let raw = raw.unwrap_or_default();
    let seed = match (seed_override, raw.seed) {
        (Some(s), _) => s,
        (None, Some(s)) => u64::try_from(s)
            .map_err(|_| ConfigError::semantic("run.seed", format!("must be non-negative, got {s}")))?,
        (None, None) => return Err(ConfigError::semantic("run.seed", "missing required key; seeds are mandatory")),
    };
    let scheme = match raw.scheme.as_deref() {
        None => Scheme::SemiImplicit,
        Some(s) => s.parse().map_err(|_| {
            ConfigError::semantic("run.scheme", format!("unknown scheme {s:?}; expected semi_implicit or explicit"))
        })?,
    };
    let horizon = finite(raw.horizon.unwrap_or(1.0), "run.T")?;
    if !(horizon > 0.0) {
        return Err(ConfigError::semantic("run.T", format!("must be positive, got {horizon}")));
    }
    let n = raw.n.map(|v| positive_count(v, "run.n")).transpose()?;
    let levels = raw
        .levels
        .map(|ls| {
            if ls.is_empty() {
                return Err(ConfigError::semantic("run.levels", "must not be empty"));
            }
            ls.into_iter().map(|v| dyadic(v, "run.levels", "levels")).collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let ref_level = raw.ref_level.map(|v| dyadic(v, "run.ref_level", "ref_level")).transpose()?;
    if let (Some(levels), Some(r)) = (&levels, ref_level) {
        let max = *levels.iter().max().expect("levels is non-empty");
        if r < 4 * max {
            return Err(ConfigError::semantic(
                "run.ref_level",
                format!("must be at least 4 x max(levels) = {}, got {r}", 4 * max),
            ));
        }
    }
    let paths = positive_count(raw.paths.unwrap_or(1), "run.paths")?;
    let error_mode = match raw.error_mode.as_deref() {
        None => ErrorModeName::GridSupLp,
        Some(s) => ErrorModeName::parse(s).ok_or_else(|| {
            ConfigError::semantic(
                "run.error_mode",
                format!("unknown mode {s:?}; expected grid_sup_lp, terminal_l2 or grid_sup_l2"),
            )
        })?,
    };
    let p = raw.p.map(|p| finite(p, "run.p")).transpose()?;
    if let Some(p) = p {
        if p < 0.0 {
            return Err(ConfigError::semantic("run.p", format!("must be >= 0, got {p}")));
        }
        if p == 0.0 && error_mode == ErrorModeName::GridSupLp {
            return Err(ConfigError::semantic("run.p", "must be positive for grid_sup_lp"));
        }
    }
    if let Some(times) = &raw.times {
        for &t in times {
            if !(0.0..=horizon).contains(&t) {
                return Err(ConfigError::semantic("run.times", format!("{t} outside [0, T]")));
            }
        }
    }
    let method = match raw.method.as_deref() {
        None => Method::Auto,
        Some(s) => s
            .parse()
            .map_err(|_| ConfigError::semantic("run.method", format!("unknown method {s:?}")))?,
    };
    let tol = raw.tol.map(|t| finite(t, "run.tol")).transpose()?;
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(ConfigError::semantic("run.tol", format!("must be positive, got {t}")));
        }
    }
    Ok(RunConfig {
        scheme,
        horizon,
        n,
        levels,
        ref_level,
        paths,
        seed,
        error_mode,
        p,
        times: raw.times,
        method,
        tol,
    })
}

fn parse_output(raw: Option<RawOutput>) -> Result<OutputConfig> {
    let raw = raw.unwrap_or_default();
    if let Some(format) = &raw.format {
        if format != "csv" {
            return Err(ConfigError::semantic("output.format", format!("only \"csv\" is supported, got {format:?}")));
        }
    }
    let precision = match raw.precision {
        None => 17,
        Some(p) if (1..=17).contains(&p) => p as usize,
        Some(p) => return Err(ConfigError::semantic("output.precision", format!("must be in 1..=17, got {p}"))),
    };
    if let Some(path) = &raw.path {
        if path.is_empty() {
            return Err(ConfigError::semantic("output.path", "must not be empty"));
        }
    }
    Ok(OutputConfig { path: raw.path, precision })
}

/// Parses and fully validates a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with_seed(text, None)
}

/// As [`parse_config`], with `seed` taking precedence over `run.seed`.
pub fn parse_config_with_seed(text: &str, seed: Option<u64>) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    Ok(ExperimentConfig {
        system: parse_system(raw.system)?,
        run: parse_run(raw.run, seed)?,
        output: parse_output(raw.output)?,
    })
}

// ---------------------------------------------------------------------------
// Serialization

fn count(n: usize) -> i64 {
    i64::try_from(n).unwrap_or(i64::MAX)
}

impl ExperimentConfig {
    /// TOML text that [`parse_config`] maps back to an equal configuration.
    ///
    /// Fails only for seeds above `i64::MAX`, which TOML cannot represent.
    pub fn to_toml(&self) -> std::result::Result<String, String> {
        let s = &self.system;
        let gamma = match &s.gamma {
            GammaSpec::Uniform(g) => RawMatrix::Text(format!("uniform: {g:?}")),
            GammaSpec::Tridiagonal(edges) => RawMatrix::Text(format!(
                "tridiagonal: {}",
                edges.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(", ")
            )),
            GammaSpec::Full(rows) => RawMatrix::Rows(rows.clone()),
        };
        let x0 = match &s.x0 {
            InitialState::Values(v) => RawVector::Values(v.clone()),
            InitialState::Linspace { lo, hi } => RawVector::Text(format!("linspace: {lo:?}, {hi:?}")),
        };
        let mut drift = RawDrift::default();
        match &s.drift {
            DriftConfig::Zero => drift.kind = Some("zero".into()),
            DriftConfig::Constant(c) => {
                drift.kind = Some("constant".into());
                drift.c = Some(c.clone());
            }
            DriftConfig::OrnsteinUhlenbeck { theta, mu } => {
                drift.kind = Some("ornstein_uhlenbeck".into());
                drift.theta = Some(*theta);
                drift.mu = Some(mu.clone());
            }
            DriftConfig::BoundedSmooth { beta } => {
                drift.kind = Some("bounded_smooth".into());
                drift.beta = Some(*beta);
            }
        }
        let mut diffusion = RawDiffusion::default();
        match &s.diffusion {
            DiffusionConfig::Identity => diffusion.kind = Some("identity".into()),
            DiffusionConfig::Zero => diffusion.kind = Some("zero".into()),
            DiffusionConfig::Constant(rows) => {
                diffusion.kind = Some("constant".into());
                diffusion.sigma = Some(rows.clone());
            }
            DiffusionConfig::DiagonalBounded { s0, s1 } => {
                diffusion.kind = Some("diagonal_bounded".into());
                diffusion.s0 = Some(*s0);
                diffusion.s1 = Some(*s1);
            }
        }
        let r = &self.run;
        let seed = i64::try_from(r.seed).map_err(|_| format!("seed {} exceeds the TOML integer range", r.seed))?;
        let raw = RawConfig {
            system: Some(RawSystem {
                d: Some(count(s.d)),
                gamma: Some(gamma),
                x0: Some(x0),
                drift: Some(drift),
                diffusion: Some(diffusion),
            }),
            run: Some(RawRun {
                scheme: Some(r.scheme.to_string()),
                horizon: Some(r.horizon),
                n: r.n.map(count),
                levels: r.levels.as_ref().map(|l| l.iter().copied().map(count).collect()),
                ref_level: r.ref_level.map(count),
                paths: Some(count(r.paths)),
                seed: Some(seed),
                error_mode: Some(r.error_mode.name().into()),
                p: r.p,
                times: r.times.clone(),
                method: Some(r.method.name().into()),
                tol: r.tol,
            }),
            output: Some(RawOutput {
                path: self.output.path.clone(),
                format: Some("csv".into()),
                precision: Some(count(self.output.precision)),
            }),
        };
        toml::to_string(&raw).map_err(|e| e.to_string())
    }
}
