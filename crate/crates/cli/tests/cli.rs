use std::path::Path;
use std::process::{Command, Output};

use noncollide_cli::exit;

const DYSON: &str = r#"
[system]
d = 3
gamma = "uniform: 4"
x0 = "linspace: -1, 1"
drift = { kind = "zero" }
diffusion = { kind = "identity" }

[run]
T = 1.0
n = 8
paths = 16
seed = 11
p = 1
levels = [4, 8, 16]
ref_level = 64
"#;

fn noncollide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noncollide"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    serde_json::from_str(stderr.trim()).unwrap_or_else(|e| panic!("bad record {stderr:?}: {e}"))
}

fn parse_row(line: &str) -> Vec<String> {
    line.split(',').map(str::to_string).collect()
}

#[test]
fn solve_two_particles_matches_closed_form() {
    let out = noncollide(&["solve", "--a", "0,3", "--c", "uniform: 2"]);
    assert_eq!(out.status.code(), Some(exit::SUCCESS));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi_1,xi_2,residual,iterations,method"));
    let row = parse_row(lines.next().unwrap());
    let xi1: f64 = row[0].parse().unwrap();
    let xi2: f64 = row[1].parse().unwrap();
    assert!((xi1 + 0.5).abs() < 1e-12, "{xi1}");
    assert!((xi2 - 3.5).abs() < 1e-12, "{xi2}");
    assert!(row[2].parse::<f64>().unwrap() <= 1e-12);
}

#[test]
fn solve_accepts_negative_offsets_and_methods() {
    for (method, c) in [
        ("newton", "full: 0,1,1; 1,0,1; 1,1,0"),
        ("homotopy", "uniform: 1"),
        ("fixed_point_nn", "tridiagonal: 1, 2"),
        ("alternating_d3", "uniform: 1"),
    ] {
        let out = noncollide(&["solve", "--a=-1,0,1", "--c", c, "--method", method]);
        assert_eq!(out.status.code(), Some(exit::SUCCESS), "{method}");
        let text = stdout(&out);
        assert!(text.lines().nth(1).unwrap().ends_with(method), "{text}");
    }
}

#[test]
fn solve_rejects_bad_input() {
    let out = noncollide(&["solve", "--a", "0,x", "--c", "uniform: 1"]);
    assert_eq!(out.status.code(), Some(exit::VALIDATION));
    assert_eq!(error_record(&out)["key"], "--a");

    let out = noncollide(&["solve", "--a", "0,1", "--c", "uniform: -1"]);
    assert_eq!(out.status.code(), Some(exit::VALIDATION));

    let out = noncollide(&["solve", "--a", "0,1", "--c", "uniform: 1", "--method", "bisection"]);
    assert_eq!(error_record(&out)["key"], "--method");
}

#[test]
fn solve_reports_non_convergence() {
    let out = noncollide(&["solve", "--a", "0,0,0", "--c", "uniform: 1", "--method", "newton", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(exit::NON_CONVERGENCE));
    assert_eq!(error_record(&out)["error"], "non_convergence");
}

#[test]
fn converge_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dyson.toml", DYSON);
    let mut outputs = Vec::new();
    for threads in ["1", "1", "4"] {
        let path = dir.path().join(format!("out-{}.csv", outputs.len()));
        let out = noncollide(&[
            "--config",
            &cfg,
            "--threads",
            threads,
            "--out",
            path.to_str().unwrap(),
            "converge",
        ]);
        assert_eq!(out.status.code(), Some(exit::SUCCESS));
        assert!(out.stdout.is_empty());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,error,std_err,pathwise_mean,pathwise_max");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("# slope="), "{}", lines[4]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dyson.toml", DYSON);
    let base = stdout(&noncollide(&["--config", &cfg, "simulate"]));
    let same = stdout(&noncollide(&["--config", &cfg, "--seed", "11", "simulate"]));
    let other = stdout(&noncollide(&["--config", &cfg, "--seed", "12", "simulate"]));
    assert_eq!(base, same);
    assert_ne!(base, other);
}

#[test]
fn simulate_layout_and_chamber() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dyson.toml", DYSON);
    let out = noncollide(&["--config", &cfg, "simulate", "--paths", "3", "--n", "5"]);
    assert_eq!(out.status.code(), Some(exit::SUCCESS));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path,k,t,x_1,x_2,x_3,min_gap"));
    let rows: Vec<Vec<String>> = lines.map(parse_row).collect();
    assert_eq!(rows.len(), 3 * 6);
    for row in &rows {
        let x: Vec<f64> = row[3..6].iter().map(|s| s.parse().unwrap()).collect();
        assert!(x[0] < x[1] && x[1] < x[2]);
        assert!(row[6].parse::<f64>().unwrap() > 0.0);
    }
    assert_eq!(rows[5][2].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn check_dyson_gamma_one_fails_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "weak.toml", &DYSON.replace("uniform: 4", "uniform: 1"));
    let out = noncollide(&["--config", &cfg, "check"]);
    assert_eq!(out.status.code(), Some(exit::CONDITION_FAILED));
    let text = stdout(&out);
    assert!(text.starts_with("condition,inequality,lhs,rhs,holds\n"));
    assert!(text.contains("false"));

    let out = noncollide(&["--config", &cfg, "check", "--p", "1"]);
    assert_eq!(out.status.code(), Some(exit::CONDITION_FAILED));

    let strong = write_config(dir.path(), "strong.toml", DYSON);
    let out = noncollide(&["--config", &strong, "check"]);
    assert_eq!(out.status.code(), Some(exit::SUCCESS));
}

#[test]
fn validation_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "noseed.toml", &DYSON.replace("seed = 11\n", ""));
    let out = noncollide(&["--config", &cfg, "simulate"]);
    assert_eq!(out.status.code(), Some(exit::VALIDATION));
    let record = error_record(&out);
    assert_eq!(record["key"], "run.seed");
    assert_eq!(record["exit_code"], 2);

    let cfg = write_config(dir.path(), "levels.toml", &DYSON.replace("[4, 8, 16]", "[3]"));
    let out = noncollide(&["--config", &cfg, "converge"]);
    let record = error_record(&out);
    assert_eq!(record["key"], "run.levels");
    assert!(record["message"].as_str().unwrap().contains("levels must be powers of 2"));

    let cfg = write_config(dir.path(), "syntax.toml", "[system]\nd = = 3\n");
    let out = noncollide(&["--config", &cfg, "simulate"]);
    assert_eq!(out.status.code(), Some(exit::VALIDATION));
    assert_eq!(error_record(&out)["line"], 2);

    let out = noncollide(&["simulate"]);
    assert_eq!(error_record(&out)["key"], "--config");
}

#[test]
fn io_errors_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let out = noncollide(&["--config", missing.to_str().unwrap(), "check"]);
    assert_eq!(out.status.code(), Some(exit::IO));
    assert_eq!(error_record(&out)["error"], "io");

    let cfg = write_config(dir.path(), "dyson.toml", DYSON);
    let unwritable = dir.path().join("no-such-dir").join("out.csv");
    let out = noncollide(&["--config", &cfg, "--out", unwritable.to_str().unwrap(), "collide"]);
    assert_eq!(out.status.code(), Some(exit::IO));
}

#[test]
fn output_path_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("collide.csv");
    let text = format!("{DYSON}\n[output]\npath = {:?}\nprecision = 6\n", target.to_str().unwrap());
    let cfg = write_config(dir.path(), "dyson.toml", &text);
    let out = noncollide(&["--config", &cfg, "collide"]);
    assert_eq!(out.status.code(), Some(exit::SUCCESS));
    let csv = std::fs::read_to_string(&target).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("paths,explicit_exits,control_exits,rate"));
    let row = parse_row(lines.next().unwrap());
    assert_eq!(row[0], "16");
    assert_eq!(row[2], "0");
    assert_eq!(row[3].split('e').next().unwrap().len(), "x.xxxxx".len());
}

#[test]
fn moments_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dyson.toml", DYSON);
    let out = noncollide(&["--config", &cfg, "moments", "--p", "2"]);
    assert_eq!(out.status.code(), Some(exit::SUCCESS));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "t,p,abs_moment,abs_moment_se,sum_inv_gap,sum_inv_gap_se,bound,inv_gap_1,inv_gap_1_se,inv_gap_2,inv_gap_2_se"
    );
    assert_eq!(lines.len(), 10);
    let first = parse_row(lines[1]);
    // At t = 0 the estimates are exact: |x0|^2 = 2 and the gaps are both 1.
    assert!((first[2].parse::<f64>().unwrap() - 2.0).abs() < 1e-14);
    assert_eq!(first[4].parse::<f64>().unwrap(), 2.0);
}

#[test]
fn chi_bar_and_inequalities_tables() {
    let out = noncollide(&["chi-bar", "--dims", "3", "--powers", "0,1"]);
    assert_eq!(out.status.code(), Some(exit::SUCCESS));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,p,chi_bar,chi_bar_sharp,grid_value");
    let chi0: f64 = parse_row(lines[1])[2].parse().unwrap();
    let chi1: f64 = parse_row(lines[2])[2].parse().unwrap();
    assert!((chi0 - 2f64.sqrt()).abs() < 1e-6);
    assert!((chi1 - 2f64.cbrt()).abs() < 1e-6);

    let out = noncollide(&["inequalities", "--dims", "3,4", "--powers", "1", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(exit::SUCCESS));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,d,p,samples,violations,max_ratio,chi");
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        assert_eq!(parse_row(line)[4], "0", "{line}");
    }

    let out = noncollide(&["inequalities", "--kind", "pairs"]);
    assert_eq!(error_record(&out)["key"], "--kind");
}

#[test]
fn help_exits_zero_and_unknown_flags_exit_two() {
    assert_eq!(noncollide(&["--help"]).status.code(), Some(exit::SUCCESS));
    assert_eq!(noncollide(&["simulate", "--bogus"]).status.code(), Some(exit::VALIDATION));
    assert_eq!(noncollide(&["--threads", "0", "chi-bar"]).status.code(), Some(exit::VALIDATION));
}
