//! Command-line front end for the `noncollide` library.
//!
//! Every subcommand writes CSV to `--out`, to `output.path` of the config, or
//! to stdout, in that order of precedence. Failures print a one-line JSON
//! record to stderr and set the exit code:
//!
//! | code | meaning                                  |
//! |------|------------------------------------------|
//! | 0    | success                                  |
//! | 1    | `check`: the parameter condition fails   |
//! | 2    | invalid config, flag or problem          |
//! | 3    | solver non-convergence                   |
//! | 4    | I/O error                                |

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod values;

pub use config::{parse_config, parse_config_with_seed, ConfigError, ExperimentConfig};
pub use error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "noncollide", version, about = "Simulate non-colliding particle systems")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base seed; overrides `run.seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Output file; overrides `output.path`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one implicit system ξ_i = a_i + Σ c_ij/(ξ_i − ξ_j).
    Solve(SolveArgs),
    /// Simulate `run.paths` trajectories on `run.n` steps.
    Simulate(SimulateArgs),
    /// Strong errors against the reference level and the fitted rate.
    Converge,
    /// Moment and inverse-gap-moment estimates.
    Moments(MomentArgs),
    /// Fraction of explicit-scheme paths leaving the chamber.
    Collide,
    /// Random sweeps of the gap inequalities.
    Inequalities(InequalityArgs),
    /// The constant χ̄(d, p) of the nearest-neighbour gap inequality.
    ChiBar(ChiArgs),
    /// Evaluate the non-collision and moment condition for the configured system.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Offsets, e.g. `0,3`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    /// `uniform:c`, `tridiagonal:c1,c2,...` or `full:row;row;...`.
    #[arg(long)]
    pub c: String,
    /// newton, homotopy, fixed_point_nn, alternating_d3 or auto.
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// semi_implicit or explicit; overrides `run.scheme`.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Steps; overrides `run.n`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Paths; overrides `run.paths`.
    #[arg(long)]
    pub paths: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    /// Moment exponent; overrides `run.p`.
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Moment exponent; overrides `run.p`.
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InequalityArgs {
    /// full, nn or both.
    #[arg(long, default_value = "both")]
    pub kind: String,
    /// Particle counts (default 3..8 for full, 3..6 for nn).
    #[arg(long)]
    pub dims: Option<String>,
    /// Exponents p.
    #[arg(long, default_value = "0,1,2")]
    pub powers: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Grid resolution for χ̄.
    #[arg(long, default_value_t = 12)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct ChiArgs {
    #[arg(long, default_value = "3,4,5,6")]
    pub dims: String,
    #[arg(long, default_value = "0,1,2")]
    pub powers: String,
    #[arg(long, default_value_t = 12)]
    pub resolution: usize,
}

/// Result of a successful command.
pub struct Output {
    pub csv: String,
    pub exit_code: i32,
    /// `output.path` from the config, used when `--out` is absent.
    pub default_path: Option<PathBuf>,
}

fn write_output(out: &Output, flag: Option<&PathBuf>) -> Result<(), CliError> {
    match flag.or(out.default_path.as_ref()) {
        Some(path) => std::fs::write(path, &out.csv).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.csv.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let run = || -> Result<i32, CliError> {
        let out = commands::dispatch(cli)?;
        write_output(&out, cli.out.as_ref())?;
        Ok(out.exit_code)
    };
    match cli.threads {
        Some(0) => Err(CliError::usage("--threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage("--threads", e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::VALIDATION } else { exit::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
