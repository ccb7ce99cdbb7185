use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const EXAMPLE_P: [&str; 3] = ["0.3*s*t", "0.2*sin(s)", "0.1*t^2"];
const EXAMPLE_F: [&str; 3] = ["cos(t)", "t", "1"];

fn cosserat(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosserat"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .expect("binary runs")
}

fn family_flags(p: [&str; 3], f: [&str; 3]) -> Vec<String> {
    let mut v = Vec::new();
    for (flag, value) in ["--a", "--b", "--c", "--f1", "--f2", "--f3"].iter().zip(p.iter().chain(f.iter())) {
        v.push(flag.to_string());
        v.push(value.to_string());
    }
    v
}

fn run_with(cmd: &str, extra: &[String], rest: &[&str], out_dir: &Path) -> Output {
    let mut args: Vec<&str> = vec![cmd];
    args.extend(extra.iter().map(String::as_str));
    args.extend_from_slice(rest);
    cosserat(&args, out_dir)
}

/// Parsed CSV body (header skipped).
fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn gen_identity_generator_reproduces_initial_twist() {
    let dir = tempfile::tempdir().unwrap();
    let out = cosserat(
        &["gen", "--a", "0", "--b", "0", "--c", "0", "--f1", "sin(t)", "--f2", "0", "--f3", "0", "--grid", "0,1,11,0,1,11"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv(&dir.path().join("solution.csv"));
    assert_eq!(header[2], "omega1");
    assert_eq!(rows.len(), 121);
    for row in rows {
        assert_eq!(row[2], row[1].sin());
        assert!(row[3..].iter().all(|v| *v == 0.0));
    }
}

#[test]
fn gen_residual_column_is_small() {
    let dir = tempfile::tempdir().unwrap();
    let flags = family_flags(EXAMPLE_P, EXAMPLE_F);
    let out = run_with("gen", &flags, &["--emit-residual", "--grid", "0,1,21,0,1,21"], dir.path());
    assert!(out.status.success());
    let (header, rows) = csv(&dir.path().join("solution.csv"));
    assert_eq!(&header[8..], ["F1", "F2", "F3"]);
    let worst = rows.iter().flat_map(|r| r[8..].iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn gen_missing_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cosserat(&["gen", "--a", "0", "--b", "0", "--c", "0", "--f1", "0", "--f3", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--f2"), "{stderr}");
}

#[test]
fn parse_and_grid_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let flags = family_flags(["s +", "0", "0"], ["0", "0", "0"]);
    let out = run_with("gen", &flags, &[], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 3"));

    let flags = family_flags(["0", "0", "0"], ["0", "0", "0"]);
    let out = run_with("gen", &flags, &["--grid", "0,1,1,0,1,11"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let flags = family_flags(["0", "0", "0"], ["1/(t-1)", "0", "0"]);
    let out = run_with("gen", &flags, &[], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "failed");
}

#[test]
fn verify_gen_output() {
    let gen_dir = tempfile::tempdir().unwrap();
    let flags = family_flags(EXAMPLE_P, EXAMPLE_F);
    assert!(run_with("gen", &flags, &[], gen_dir.path()).status.success());
    let manifest = gen_dir.path().join("manifest.json");

    let dir = tempfile::tempdir().unwrap();
    let out = cosserat(&["verify", "--from", manifest.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    assert!(report["max_norm"].as_f64().unwrap() <= 1e-9);
    assert_eq!(report["pass"], true);
    let (header, rows) = csv(&dir.path().join("residual.csv"));
    assert_eq!(header, ["s", "t", "F1", "F2", "F3"]);
    assert_eq!(rows.len(), 101 * 101);

    let fd_dir = tempfile::tempdir().unwrap();
    let out = cosserat(
        &["verify", "--from", manifest.to_str().unwrap(), "--fd", "1e-4", "--tol", "1e-6"],
        fd_dir.path(),
    );
    assert!(out.status.success());
    let fd = json(&fd_dir.path().join("report.json"));
    assert!(fd["max_norm"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_fails_on_non_solution_with_tight_tolerance() {
    // an FD residual cannot meet a 1e-15 bound
    let dir = tempfile::tempdir().unwrap();
    let flags = family_flags(EXAMPLE_P, EXAMPLE_F);
    let out = run_with("verify", &flags, &["--fd", "1e-2", "--tol", "1e-15", "--grid", "0,1,5,0,1,5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&dir.path().join("report.json"))["pass"], false);
}

#[test]
fn shifted_family_is_still_a_solution() {
    let dir = tempfile::tempdir().unwrap();
    let flags = family_flags(EXAMPLE_P, EXAMPLE_F);
    let out = run_with("verify", &flags, &["--shift-s", "0.25", "--shift-t", "-0.5", "--grid", "0,1,21,0,1,21"], dir.path());
    assert!(out.status.success());
    let (_, rows) = csv(&dir.path().join("residual.csv"));
    assert_eq!(rows[0][..2], [0.0, 0.0]);
}

#[test]
fn transform_then_verify() {
    let gen_dir = tempfile::tempdir().unwrap();
    let flags = family_flags(EXAMPLE_P, EXAMPLE_F);
    assert!(run_with("gen", &flags, &[], gen_dir.path()).status.success());
    let base = gen_dir.path().join("manifest.json");

    let dir = tempfile::tempdir().unwrap();
    let out = cosserat(
        &["transform", "--from", base.to_str().unwrap(), "--pa", "0", "--pb", "0.2*s", "--pc", "0.1*t"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&dir.path().join("closure.json"))["max_norm"].as_f64().unwrap() <= 1e-8);
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["p_prime"][1], "0.2*s");

    let verify_dir = tempfile::tempdir().unwrap();
    let out = cosserat(
        &["verify", "--from", dir.path().join("manifest.json").to_str().unwrap()],
        verify_dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(json(&verify_dir.path().join("report.json"))["tol"], 1e-8);
}

#[test]
fn random_draws_are_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let out = cosserat(&["transform", "--random", "--random-prime", "--seed", seed], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let config = |d: &tempfile::TempDir| json(&d.path().join("manifest.json"))["config"].clone();
    assert_eq!(config(&a), config(&b));
    assert_ne!(config(&a), config(&c));
}

#[test]
fn reconstruct_round_trip() {
    let gen_dir = tempfile::tempdir().unwrap();
    let flags = family_flags(["0.2+0.3*s*t", "0.1*sin(s)", "0.05*t"], ["cos(t)", "0.5*t", "1"]);
    assert!(run_with("gen", &flags, &[], gen_dir.path()).status.success());

    let dir = tempfile::tempdir().unwrap();
    let out = cosserat(
        &["reconstruct", "--from", gen_dir.path().join("manifest.json").to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let diag = json(&dir.path().join("diagnostics.json"));
    assert!(diag["p_error"].as_f64().unwrap() <= 1e-6);
    assert!(diag["f_error"].as_f64().unwrap() <= 1e-5);
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["p0"][0], "0.2");
    let (header, rows) = csv(&dir.path().join("p.csv"));
    assert_eq!(header, ["s", "t", "a", "b", "c"]);
    assert_eq!(rows.len(), 121);
    let (header, rows) = csv(&dir.path().join("f.csv"));
    assert_eq!(header, ["t", "f1", "f2", "f3"]);
    assert_eq!(rows.len(), 11);
}

#[test]
fn reconstruct_through_singularity_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = cosserat(
        &[
            "reconstruct", "--k1", "1", "--k2", "0", "--k3", "0", "--w1", "0", "--w2", "0", "--w3", "0", "--p0a", "6",
            "--p0b", "0", "--p0c", "0",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("singular at (s, t)"), "{stderr}");
    let diag = json(&dir.path().join("diagnostics.json"));
    let s = diag["singular"]["s"].as_f64().unwrap();
    assert!((s - (std::f64::consts::TAU - 6.0)).abs() < 0.01, "{s}");
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["outputs"]["p.csv"].is_string());
}

#[test]
fn simulate_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("sim_clamped.json");
    let out = cosserat(&["simulate", "--config", config.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv(&dir.path().join("fields.csv"));
    assert_eq!(header.len(), 14);
    // 40 steps every 10 plus the initial state, 41 nodes each
    assert_eq!(rows.len(), 5 * 41);
    let (header, rows) = csv(&dir.path().join("frame.csv"));
    assert_eq!(header.len(), 13);
    assert_eq!(rows.len(), 41);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["summary"]["monotonicity"]["positive_definite"], true);
    assert!(summary["frame_orthonormality_defect"].as_f64().unwrap() <= 1e-8);
    let manifest = json(&dir.path().join("manifest.json"));
    assert!(manifest["inputs"][config.to_str().unwrap()].is_string());
}

#[test]
fn cfl_error_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("sim_clamped.json"))
        .unwrap()
        .replace("\"cfl\": 0.5", "\"dt\": 0.1, \"cfl_policy\": \"error\"");
    let config = dir.path().join("config.json");
    fs::write(&config, text).unwrap();
    let out = cosserat(&["simulate", "--config", config.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn invalid_simulation_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, "{\"material\": 1}").unwrap();
    let out = cosserat(&["simulate", "--config", config.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convergence_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = cosserat(&["convergence", "--steps", "200"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let study = json(&dir.path().join("convergence.json"));
    let orders = study["orders"].as_array().unwrap();
    assert_eq!(orders.len(), 2);
    for p in orders {
        assert!((p.as_f64().unwrap() - 2.0).abs() <= 0.2);
    }
}

#[test]
fn manifest_is_written_before_data() {
    // an output directory that cannot hold solution.csv still gets a manifest
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("solution.csv")).unwrap();
    let flags = family_flags(["0", "0", "0"], ["0", "0", "0"]);
    let out = run_with("gen", &flags, &[], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["command"], "gen");
}
