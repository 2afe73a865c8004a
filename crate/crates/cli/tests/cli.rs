//! End-to-end runs of the installed binary: exit codes, determinism, and
//! the artifact layout.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_willislab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const SIMULATE: &str = r#"
[simulate]
variant = "classical"

[simulate.grid]
kind = "line"
n = [32]
length = [6.283185307179586]
boundary = "periodic"

[simulate.material]
kind = "uniform-scalar"
c = 1.0
rho = 1.0

[simulate.solver]
cfl = 0.5
n_steps = 40
record_every = 10
monitors = ["energy"]

[simulate.source]
kind = "point"
ix = 8
component = 0

[simulate.source.signal]
kind = "ricker"
center_freq = 0.8
delay = 1.5
amplitude = 1.0
"#;

const HOMOGENIZE: &str = r#"
[homogenize]
omega_min = 0.05
omega_max = 0.8
n_points = 50
n_harmonics = 32

[homogenize.laminate]
cell_length = 1.0

[[homogenize.laminate.phases]]
c = 2.0
rho = 1.0
fraction = 0.3

[[homogenize.laminate.phases]]
c = 1.0
rho = 3.0
fraction = 0.2

[[homogenize.laminate.phases]]
c = 4.0
rho = 0.7
fraction = 0.5
"#;

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn simulate_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sim.toml", SIMULATE);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let res = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let a = dir_bytes(&out_a);
    let b = dir_bytes(&out_b);
    assert!(!a.is_empty());
    assert_eq!(a, b, "repeated runs must write identical bytes");
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"u_00000000.csv"));
    assert!(names.contains(&"u_00000040.csv"));
    assert!(names.contains(&"monitor_energy.csv"));
    assert!(names.contains(&"run_meta.txt"));
}

#[test]
fn misspelled_key_is_a_config_error_with_a_suggestion() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = SIMULATE.replace("cfl = 0.5", "clf = 0.5");
    let cfg = write_config(tmp.path(), "bad.toml", &bad);
    let res = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.starts_with("error[config]:"), "stderr: {err}");
    assert!(err.contains("clf") && err.contains("did you mean `cfl`"), "stderr: {err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let res = run(&["simulate", "--config", "/nonexistent/willislab.toml"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn mode_mismatch_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sim.toml", SIMULATE);
    let res = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("`simulate` mode"), "stderr: {err}");
}

#[test]
fn homogenize_sweep_writes_tables_within_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "hom.toml", HOMOGENIZE);
    let out = tmp.path().join("sweep");
    let started = std::time::Instant::now();
    let res = run(&[
        "homogenize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let elapsed = started.elapsed();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(elapsed.as_secs_f64() < 30.0, "sweep took {elapsed:?}");
    let disp = fs::read_to_string(out.join("dispersion.csv")).unwrap();
    assert!(disp.starts_with("omega,q,phase_velocity,converged\n"));
    assert_eq!(disp.lines().count(), 51);
    let ops = fs::read_to_string(out.join("operators.csv")).unwrap();
    assert!(ops.starts_with("omega,q,ceff_re,"));
    assert!(fs::read_to_string(out.join("run_meta.txt"))
        .unwrap()
        .contains("config_sha256 = "));
}

#[test]
fn verify_limits_suite_passes_and_writes_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ver.toml", "[verify]\n");
    let out = tmp.path().join("report");
    let res = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--suite",
        "limits",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("[PASS] limits/static-series-spring"), "stdout: {text}");
    assert!(text.contains("all 4 checks passed"), "stdout: {text}");
    assert!(!text.contains("euler-lagrange/"), "stdout: {text}");
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report, text);
}

#[test]
fn unknown_suite_flag_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ver.toml", "[verify]\n");
    let res = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--suite",
        "euler",
    ]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("unknown suite `euler`"), "stderr: {err}");
}
