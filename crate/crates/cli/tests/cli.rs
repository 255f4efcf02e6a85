use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use confpos::{Field, Grid};

struct Run {
    code: i32,
    stderr: String,
    out: PathBuf,
}

impl Run {
    fn report(&self) -> String {
        std::fs::read_to_string(self.out.join("report.csv")).unwrap()
    }

    fn summary(&self) -> String {
        std::fs::read_to_string(self.out.join("summary.txt")).unwrap()
    }
}

fn run_in(dir: &Path, name: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{name}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    let Output { status, stderr, .. } = Command::new(env!("CARGO_BIN_EXE_confpos"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run { code: status.code().unwrap_or(-1), stderr: String::from_utf8_lossy(&stderr).into(), out }
}

fn fact(report: &str, key: &str) -> Option<String> {
    report.lines().find_map(|l| l.strip_prefix(&format!("{key},")).map(str::to_string))
}

#[test]
fn sharp_constant_three_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), "sc", r#"{"command": "sharp-constant", "kernel": {"dim": 3, "lambda": 1}}"#, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.report();
    let row = report.lines().nth(1).unwrap();
    let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((value - 2.294_010_7).abs() < 1e-6, "{value}");
    assert!(r.summary().contains("verdict: pass"));
}

#[test]
fn invalid_lambda_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), "bad", r#"{"command": "energy", "kernel": {"dim": 3, "lambda": 3.5}}"#, &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("lambda must lie in (0, N)"), "{}", r.stderr);
    assert!(!r.out.join("report.csv").exists());
}

#[test]
fn unknown_key_reports_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(
        dir.path(),
        "unk",
        r#"{"command": "energy", "kernel": {"dim": 1, "lambda": 0.5}, "grid": {"min": -1, "max": 1, "points": 16, "pts": 3}}"#,
        &[],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("grid") && r.stderr.contains("pts"), "{}", r.stderr);
}

#[test]
fn missing_config_file_and_bad_threads() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_confpos"))
        .args(["--config", "/nonexistent/run.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let r = run_in(dir.path(), "t0", r#"{"command": "sharp-constant", "kernel": {"dim": 1, "lambda": 0.5}}"#, &[
        "--threads", "0",
    ]);
    assert_eq!(r.code, 2);
}

#[test]
fn energy_of_extremizer_passes() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), "e", r#"{"command": "energy", "kernel": {"dim": 1, "lambda": 0.5}}"#, &["--verbose"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.report();
    assert!(report.starts_with("value,quadrature,est_error\n"));
    assert!(report.lines().nth(1).unwrap().contains(",direct,"));
    assert!(r.summary().contains("[PASS] sharp_constant_match"));
}

#[test]
fn summary_numbers_appear_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(
        dir.path(),
        "pos",
        r#"{"command": "positivity", "kernel": {"dim": 1, "lambda": 0.5},
            "grid": {"min": -4, "max": 4, "points": 256},
            "function": {"family": "gaussians", "bumps": [{"center": [0.7], "width": 0.5}]},
            "region": {"kind": "halfspace", "normal": [1], "offset": 0}}"#,
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (report, summary) = (r.report(), r.summary());
    assert!(report.starts_with("defect,defect_via_g,oracle_value,strict_flag\n"));
    for token in summary.split(|c: char| c.is_whitespace() || c == ':') {
        if token.parse::<f64>().is_ok() {
            assert!(report.contains(token), "{token} missing from report");
        }
    }
}

#[test]
fn positivity_outside_valid_range_suppresses_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(
        dir.path(),
        "p3",
        r#"{"command": "positivity", "kernel": {"dim": 3, "lambda": 0.5},
            "grid": {"min": -2, "max": 2, "points": 16},
            "function": {"family": "gaussians", "bumps": [{"center": [0, 0, 0.5], "width": 0.5}]},
            "region": {"kind": "halfspace", "normal": [0, 0, 1], "offset": 0}}"#,
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(fact(&r.report(), "positivity_valid").as_deref(), Some("false"));
    let summary = r.summary();
    assert!(summary.contains("[SKIP] nonnegativity"));
    assert!(!summary.contains("[PASS] nonnegativity") && !summary.contains("[FAIL]"));
}

#[test]
fn failing_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(
        dir.path(),
        "gauss",
        r#"{"command": "lizhu-check", "kernel": {"dim": 1, "lambda": 0.5},
            "grid": {"min": -10, "max": 10, "points": 1024},
            "function": {"family": "gaussians", "bumps": [{"center": [0], "width": 1}]}}"#,
        &[],
    );
    assert_eq!(r.code, 1, "{}", r.stderr);
    assert!(r.summary().contains("[FAIL] pointwise_invariance"));
}

#[test]
fn bracketing_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // half the mass sits beyond u along e, so only the limiting half-line holds half
    std::fs::write(dir.path().join("cloud.csv"), "x,weight\n-1,1\n2,1\n").unwrap();
    let r = run_in(
        dir.path(),
        "br",
        r#"{"command": "hemiball", "kernel": {"dim": 1, "lambda": 0.5}, "measure": "cloud.csv",
            "rays": [{"direction": [1], "u": 1}]}"#,
        &[],
    );
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn hemiball_radii_of_density() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(
        dir.path(),
        "hb",
        r#"{"command": "hemiball", "kernel": {"dim": 1, "lambda": 0.5}, "power": 1,
            "grid": {"min": -20, "max": 20, "points": 4096},
            "function": {"family": "algebraic", "exponent": 1},
            "centers": [[0], [1]], "expected": [1, 1.4142135623730951],
            "rays": [{"direction": [1], "u": 1}]}"#,
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.report();
    assert_eq!(report.lines().filter(|l| l.starts_with("ball,")).count(), 2);
    assert_eq!(report.lines().filter(|l| l.starts_with("ray,")).count(), 1);
}

#[test]
fn field_file_input_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::cube(1, -4.0, 4.0, 128).unwrap();
    let f = Field::from_fn(g, |x| (-(x.coords()[0] - 0.4).powi(2)).exp());
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    std::fs::write(dir.path().join("f.csv"), buf).unwrap();
    let r = run_in(
        dir.path(),
        "tr",
        r#"{"command": "transform", "kernel": {"dim": 1, "lambda": 0.5}, "write_fields": true,
            "function": {"family": "file", "path": "f.csv"},
            "region": {"kind": "halfspace", "normal": [1], "offset": 0.1}}"#,
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = Field::read_csv(std::io::BufReader::new(std::fs::File::open(r.out.join("transformed.csv")).unwrap()))
        .unwrap();
    assert_eq!(t.grid(), f.grid());
}

#[test]
fn represent_indicator_value() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(
        dir.path(),
        "rep",
        r#"{"command": "represent", "kernel": {"dim": 1, "lambda": 0.5},
            "grid": {"min": -2, "max": 2, "points": 256},
            "function": {"family": "indicator", "center": [0.5], "radius": 0.5},
            "expected": [1.10457], "tolerances": {"relative": 0.005}}"#,
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn seeded_symmetrization_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"command": "symmetrize", "kernel": {"dim": 1, "lambda": 0.5}, "seed": 11,
                  "grid": {"min": -10, "max": 10, "points": 256},
                  "function": {"family": "indicator", "radius": 1},
                  "schedule": {"max_sweeps": 3}, "tolerances": {"fit_error": 1}}"#;
    let a = run_in(dir.path(), "a", cfg, &["--threads", "1"]);
    let b = run_in(dir.path(), "b", cfg, &["--threads", "3"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.report(), b.report());
    assert_eq!(fact(&a.report(), "seed").as_deref(), Some("11"));
    assert!(a.report().starts_with("step,region_kind,center_1,radius_or_offset,"));
}

#[test]
fn counterexample_writes_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), "ce", r#"{"command": "counterexample", "kernel": {"dim": 3, "lambda": 0.5}}"#, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.report();
    assert!(report.lines().any(|l| l.starts_with("negative,-")));
    assert!(report.lines().any(|l| l.starts_with("positive,")));
}
