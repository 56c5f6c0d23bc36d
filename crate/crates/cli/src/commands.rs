//! Subcommand implementations. Each returns the CSV text; writing it is left
//! to the caller.

use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use noncollide::analysis::{
    chi_bar, chi_bar_grid, chi_bar_sharp, collision_rate_explicit, estimate_moments, fit_rate, run_convergence,
    sweep_full, sweep_nn, ChiObjective, ConvergenceStudy, MomentStudy,
};
use noncollide::model::{check_full_interaction_condition, check_nn_condition};
use noncollide::scheme::{replication_seed, simulate};
use noncollide::{BrownianPath, Error, ImplicitProblem, Method, Scheme, SolverOptions, TimeGrid};

use crate::config::{parse_config_with_seed, ExperimentConfig};
use crate::csv::{Csv, Field};
use crate::error::{exit, CliError};
use crate::values::{parse_coefficients, parse_vector};
use crate::{ChiArgs, CheckArgs, Cli, Command, InequalityArgs, MomentArgs, Output, SimulateArgs, SolveArgs};

/// Resolution of the χ̄ grid used by `check`.
const CHECK_CHI_RESOLUTION: usize = 12;

pub fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Solve(args) => solve(cli, args),
        Command::Simulate(args) => simulate_paths(&load(cli)?, args),
        Command::Converge => converge(&load(cli)?),
        Command::Moments(args) => moments(&load(cli)?, args),
        Command::Collide => collide(&load(cli)?),
        Command::Inequalities(args) => inequalities(cli, args),
        Command::ChiBar(args) => chi_table(cli, args),
        Command::Check(args) => check(&load(cli)?, args),
    }
}

fn read_config(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(parse_config_with_seed(&text, seed)?)
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    match &cli.config {
        Some(path) => read_config(path, cli.seed),
        None => Err(CliError::usage("--config", "this subcommand needs a configuration file")),
    }
}

fn optional_config(cli: &Cli) -> Result<Option<ExperimentConfig>, CliError> {
    cli.config.as_ref().map(|p| read_config(p, cli.seed)).transpose()
}

fn solver_options(cfg: &ExperimentConfig) -> SolverOptions {
    let mut opts = SolverOptions::with_method(cfg.run.method);
    if let Some(tol) = cfg.run.tol {
        opts.tol = tol;
    }
    opts
}

fn finish(cfg: Option<&ExperimentConfig>, csv: Csv, exit_code: i32) -> Output {
    Output {
        csv: csv.into_string(),
        exit_code,
        default_path: cfg.and_then(|c| c.output.path.as_ref()).map(PathBuf::from),
    }
}

fn precision(cfg: Option<&ExperimentConfig>) -> usize {
    cfg.map_or(17, |c| c.output.precision)
}

fn require<T: Copy>(value: Option<T>, key: &str, command: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(key, format!("required by `{command}`")))
}

fn numbered(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}{i}"))
}

fn solve(cli: &Cli, args: &SolveArgs) -> Result<Output, CliError> {
    let cfg = optional_config(cli)?;
    let a = parse_vector(&args.a).map_err(|e| CliError::value("--a", e))?;
    let d = a.len();
    let c = parse_coefficients(&args.c)
        .and_then(|c| c.to_matrix(d))
        .map_err(|e| CliError::value("--c", e))?;
    let method = Method::from_str(&args.method).map_err(|e| CliError::usage("--method", e.to_string()))?;
    let mut opts = SolverOptions::with_method(method);
    if let Some(tol) = args.tol {
        opts.tol = tol;
    }
    if let Some(max_iter) = args.max_iter {
        opts.max_iter = max_iter;
    }
    let problem = ImplicitProblem::new(a, c)?;
    let report = noncollide::implicit_solver::solve(&problem, &opts)?;

    let mut csv = Csv::new(precision(cfg.as_ref()));
    csv.header(numbered("xi_", d).chain(["residual".into(), "iterations".into(), "method".into()]));
    csv.row(
        report
            .xi
            .iter()
            .map(|&x| Field::from(x))
            .chain([
                Field::from(report.residual),
                Field::from(report.iterations),
                Field::from(report.method.name()),
            ]),
    );
    Ok(finish(cfg.as_ref(), csv, exit::SUCCESS))
}

fn simulate_paths(cfg: &ExperimentConfig, args: &SimulateArgs) -> Result<Output, CliError> {
    let scheme = match &args.scheme {
        Some(s) => Scheme::from_str(s).map_err(|e| CliError::usage("--scheme", e.to_string()))?,
        None => cfg.run.scheme,
    };
    let n = require(args.n.or(cfg.run.n), "run.n", "simulate")?;
    let paths = args.paths.unwrap_or(cfg.run.paths);
    if paths == 0 {
        return Err(CliError::usage("--paths", "must be at least 1"));
    }
    let system = cfg.system.build()?;
    let d = system.d();
    let horizon = cfg.run.horizon;
    let grid = TimeGrid::new(horizon, n)?;
    let opts = solver_options(cfg);

    let results: Vec<Result<_, Error>> = (0..paths)
        .into_par_iter()
        .map(|m| {
            let seed = replication_seed(cfg.run.seed, m as u64);
            BrownianPath::generate_uniform(seed, d, horizon, n)
                .and_then(|path| simulate(&system, &grid, &path, scheme, &opts))
                .map_err(|e| Error::Replication {
                    replication: m,
                    source: Box::new(e),
                })
        })
        .collect();

    let mut csv = Csv::new(cfg.output.precision);
    csv.header(
        ["path".to_string(), "k".into(), "t".into()]
            .into_iter()
            .chain(numbered("x_", d))
            .chain(["min_gap".into()]),
    );
    for (m, result) in results.into_iter().enumerate() {
        let path = result?;
        for k in 0..path.len() {
            let state = path.state(k);
            csv.row(
                [Field::from(m), Field::from(k), Field::from(grid.t(k))]
                    .into_iter()
                    .chain(state.iter().map(|&x| Field::from(x)))
                    .chain([Field::from(path.gap_min_at(k))]),
            );
        }
    }
    Ok(finish(Some(cfg), csv, exit::SUCCESS))
}

fn semi_implicit_only(cfg: &ExperimentConfig, command: &str) -> Result<(), CliError> {
    match cfg.run.scheme {
        Scheme::SemiImplicit => Ok(()),
        Scheme::Explicit => Err(CliError::usage(
            "run.scheme",
            format!("`{command}` runs the semi-implicit scheme only"),
        )),
    }
}

fn converge(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    semi_implicit_only(cfg, "converge")?;
    let levels = cfg
        .run
        .levels
        .clone()
        .ok_or_else(|| CliError::usage("run.levels", "required by `converge`"))?;
    let ref_level = require(cfg.run.ref_level, "run.ref_level", "converge")?;
    let study = ConvergenceStudy {
        system: cfg.system.build()?,
        horizon: cfg.run.horizon,
        levels,
        ref_level,
        replications: cfg.run.paths,
        error_mode: cfg.run.error_mode(),
        base_seed: cfg.run.seed,
        solver: solver_options(cfg),
    };
    let outcome = run_convergence(&study)?;

    let mut csv = Csv::new(cfg.output.precision);
    csv.header(["n", "error", "std_err", "pathwise_mean", "pathwise_max"]);
    for (level, trend) in outcome.errors.iter().zip(&outcome.trend) {
        csv.row([
            Field::from(level.n),
            Field::from(level.error),
            Field::from(level.std_err),
            Field::from(trend.mean),
            Field::from(trend.max),
        ]);
    }
    if outcome.errors.len() >= 3 {
        if let Ok(fit) = fit_rate(&outcome.errors) {
            csv.comment(&[
                ("slope", fit.slope),
                ("intercept", fit.intercept),
                ("r_squared", fit.r_squared),
            ]);
        }
    }
    Ok(finish(Some(cfg), csv, exit::SUCCESS))
}

fn moments(cfg: &ExperimentConfig, args: &MomentArgs) -> Result<Output, CliError> {
    semi_implicit_only(cfg, "moments")?;
    let n = require(cfg.run.n, "run.n", "moments")?;
    let p = require(args.p.or(cfg.run.p), "run.p", "moments")?;
    let horizon = cfg.run.horizon;
    let times = cfg
        .run
        .times
        .clone()
        .unwrap_or_else(|| (0..=8).map(|k| k as f64 * horizon / 8.0).collect());
    let study = MomentStudy {
        system: cfg.system.build()?,
        horizon,
        n,
        p,
        replications: cfg.run.paths,
        base_seed: cfg.run.seed,
        solver: solver_options(cfg),
    };
    let reports = estimate_moments(&study, &times)?;
    let gaps = study.system.d() - 1;

    let mut csv = Csv::new(cfg.output.precision);
    let mut header: Vec<String> = [
        "t",
        "p",
        "abs_moment",
        "abs_moment_se",
        "sum_inv_gap",
        "sum_inv_gap_se",
        "bound",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    for i in 1..=gaps {
        header.push(format!("inv_gap_{i}"));
        header.push(format!("inv_gap_{i}_se"));
    }
    csv.header(header);
    for r in &reports {
        let mut row = vec![
            Field::from(r.t),
            Field::from(r.p),
            Field::from(r.abs_moment.mean),
            Field::from(r.abs_moment.std_err),
            Field::from(r.sum_inv_gap.mean),
            Field::from(r.sum_inv_gap.std_err),
            Field::from(r.bound),
        ];
        for g in &r.inv_gap_moments {
            row.push(Field::from(g.mean));
            row.push(Field::from(g.std_err));
        }
        csv.row(row);
    }
    Ok(finish(Some(cfg), csv, exit::SUCCESS))
}

fn collide(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let n = require(cfg.run.n, "run.n", "collide")?;
    let system = cfg.system.build()?;
    let report = collision_rate_explicit(
        &system,
        cfg.run.horizon,
        n,
        cfg.run.paths,
        cfg.run.seed,
        &solver_options(cfg),
    )?;
    let mut csv = Csv::new(cfg.output.precision);
    csv.header(["paths", "explicit_exits", "control_exits", "rate"]);
    csv.row([
        Field::from(report.paths),
        Field::from(report.explicit_exits),
        Field::from(report.control_exits),
        Field::from(report.rate),
    ]);
    Ok(finish(Some(cfg), csv, exit::SUCCESS))
}

fn parse_dims(text: &str, key: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(key, format!("not a particle count: {:?}", s.trim())))
        })
        .collect()
}

fn parse_powers(text: &str) -> Result<Vec<f64>, CliError> {
    parse_vector(text).map_err(|e| CliError::value("--powers", e))
}

fn inequalities(cli: &Cli, args: &InequalityArgs) -> Result<Output, CliError> {
    let cfg = optional_config(cli)?;
    let seed = cli.seed.or(cfg.as_ref().map(|c| c.run.seed)).unwrap_or(0);
    let (full, nn) = match args.kind.as_str() {
        "full" => (true, false),
        "nn" => (false, true),
        "both" => (true, true),
        other => {
            return Err(CliError::usage(
                "--kind",
                format!("unknown kind {other:?}; expected full, nn or both"),
            ))
        }
    };
    let given = args.dims.as_deref().map(|t| parse_dims(t, "--dims")).transpose()?;
    let powers = parse_powers(&args.powers)?;

    let mut csv = Csv::new(precision(cfg.as_ref()));
    csv.header(["kind", "d", "p", "samples", "violations", "max_ratio", "chi"]);
    if full {
        for &d in given.as_deref().unwrap_or(&[3, 4, 5, 6, 7, 8]) {
            for &p in &powers {
                let r = sweep_full(d, p, args.samples, seed)?;
                csv.row([
                    Field::from("full"),
                    Field::from(d),
                    Field::from(p),
                    Field::from(r.samples),
                    Field::from(r.violations),
                    Field::from(r.max_ratio),
                    Field::from(""),
                ]);
            }
        }
    }
    if nn {
        for &d in given.as_deref().unwrap_or(&[3, 4, 5, 6]) {
            for &p in &powers {
                let chi = chi_bar(d, p, args.resolution)?;
                let r = sweep_nn(d, p, chi, args.samples, seed)?;
                csv.row([
                    Field::from("nn"),
                    Field::from(d),
                    Field::from(p),
                    Field::from(r.samples),
                    Field::from(r.violations),
                    Field::from(r.max_ratio),
                    Field::from(chi),
                ]);
            }
        }
    }
    Ok(finish(cfg.as_ref(), csv, exit::SUCCESS))
}

fn chi_table(cli: &Cli, args: &ChiArgs) -> Result<Output, CliError> {
    let cfg = optional_config(cli)?;
    let dims = parse_dims(&args.dims, "--dims")?;
    let powers = parse_powers(&args.powers)?;
    let mut csv = Csv::new(precision(cfg.as_ref()));
    csv.header(["d", "p", "chi_bar", "chi_bar_sharp", "grid_value"]);
    for &d in &dims {
        for &p in &powers {
            csv.row([
                Field::from(d),
                Field::from(p),
                Field::from(chi_bar(d, p, args.resolution)?),
                Field::from(chi_bar_sharp(d, p, args.resolution)?),
                Field::from(chi_bar_grid(d, p, args.resolution, ChiObjective::Literal)?),
            ]);
        }
    }
    Ok(finish(cfg.as_ref(), csv, exit::SUCCESS))
}

fn check(cfg: &ExperimentConfig, args: &CheckArgs) -> Result<Output, CliError> {
    let p = require(args.p.or(cfg.run.p), "run.p", "check")?;
    let system = cfg.system.build()?;
    let report = if system.uniform_gamma().is_some() {
        check_full_interaction_condition(&system, p)?
    } else if system.nearest_neighbor_gamma().is_some() {
        let chi = chi_bar_sharp(system.d(), p, CHECK_CHI_RESOLUTION)?;
        check_nn_condition(&system, p, chi)?
    } else {
        return Err(CliError::usage(
            "system.gamma",
            "`check` needs uniform or nearest-neighbour interaction",
        ));
    };
    let mut csv = Csv::new(cfg.output.precision);
    csv.header(["condition", "inequality", "lhs", "rhs", "holds"]);
    for ineq in &report.inequalities {
        csv.row([
            Field::from(report.condition),
            Field::from(ineq.label),
            Field::from(ineq.lhs),
            Field::from(ineq.rhs),
            Field::from(ineq.holds),
        ]);
    }
    let code = if report.satisfied() {
        exit::SUCCESS
    } else {
        exit::CONDITION_FAILED
    };
    Ok(finish(Some(cfg), csv, code))
}
