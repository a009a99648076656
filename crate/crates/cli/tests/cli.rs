use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn abflux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abflux")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, mode: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![mode, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    abflux(&args)
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(file)).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn identical_configs_give_identical_bytes() {
    for (mode, cfg, file) in [
        ("spectrum", r#"{"physics": {"beta": 0.25}, "grid": {"n_points": 1024}}"#, "spectrum.csv"),
        ("algebra-check", r#"{"physics": {"beta": 0.3}, "grid": {"n_points": 256}, "seed": 7}"#, "algebra_check.csv"),
        ("evolve", r#"{"physics": {"beta": 0.5}, "grid": {"n_points": 256}, "truncation": {"m_max": 8}, "timing": {"t_final": 0.05}}"#, "evolve.csv"),
    ] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert!(run_in(a.path(), mode, cfg, &[]).status.success());
        assert!(run_in(b.path(), mode, cfg, &[]).status.success());
        assert_eq!(read(a.path(), file), read(b.path(), file), "{mode}");
    }
}

#[test]
fn charge_and_flux_echo_beta_minus_one_half() {
    let d = TempDir::new().unwrap();
    let out = run_in(d.path(), "equivalence", r#"{"physics": {"q": 1, "phi": 3.141592653589793}}"#, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(d.path());
    assert_eq!(m["config"]["physics"]["beta"].as_f64(), Some(-0.5));
    assert_eq!(m["config"]["physics"]["source"], "q,phi");
    let rows = data_rows(&read(d.path(), "equivalence.csv"));
    assert_eq!(rows[0][0], "-5.0000000000000000e-1");
}

#[test]
fn equivalence_row_passes() {
    let d = TempDir::new().unwrap();
    assert!(run_in(d.path(), "equivalence", r#"{"physics": {"beta": 0.3}}"#, &[]).status.success());
    let csv = read(d.path(), "equivalence.csv");
    assert!(csv.contains("alpha,m_min,m_max,n_points,max_rel_diff,pass\n"));
    let row = &data_rows(&csv)[0];
    assert!(row[4].parse::<f64>().unwrap() < 1e-13);
    assert_eq!(row[5], "true");
}

#[test]
fn spectrum_contains_the_half_integer_anchor() {
    let d = TempDir::new().unwrap();
    assert!(run_in(d.path(), "spectrum", r#"{"physics": {"beta": 0.5}}"#, &[]).status.success());
    let csv = read(d.path(), "spectrum.csv");
    assert!(csv.contains("hbar^2/(M R^2)"));
    let anchor = data_rows(&csv).into_iter().find(|r| r[1] == "0" && r[2] == "1").unwrap();
    let e: f64 = anchor[3].parse().unwrap();
    let want = std::f64::consts::PI.powi(2) / 2.0;
    assert!((e - want).abs() / want < 1e-4, "{e}");
}

#[test]
fn defaults_are_echoed_in_the_manifest() {
    let d = TempDir::new().unwrap();
    assert!(run_in(d.path(), "spectrum", r#"{"physics": {"beta": 0}}"#, &[]).status.success());
    let m = manifest(d.path());
    assert_eq!(m["config"]["grid"]["n_points"], 4096);
    assert_eq!(m["config"]["grid"]["rho_min"].as_f64(), Some(1e-3));
    assert_eq!(m["config"]["truncation"]["k_per_sector"], 3);
    assert_eq!(m["config"]["seed"], 0);
    assert_eq!(m["outputs"][0], "spectrum.csv");
    assert!(m["version"].is_string() && m["wall_time_s"].is_number());
}

#[test]
fn flags_override_the_file() {
    let d = TempDir::new().unwrap();
    let out = run_in(d.path(), "equivalence", r#"{"physics": {"beta": 0.3}}"#, &["--beta", "-1.25", "--n-points", "64", "--format", "json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&read(d.path(), "equivalence.json")).unwrap();
    assert_eq!(v["columns"][0], "alpha");
    assert_eq!(v["rows"][0][0].as_f64(), Some(-1.25));
    assert_eq!(v["rows"][0][3], 64);
}

#[test]
fn conflicting_physics_exits_one_and_names_the_keys() {
    let d = TempDir::new().unwrap();
    let out = run_in(d.path(), "spectrum", r#"{"physics": {"beta": 0.25, "q": 1, "phi": 1}}"#, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("physics.beta") && err.contains("physics.q"), "{err}");
    assert!(!d.path().join("out").join("manifest.json").exists());
}

#[test]
fn parse_errors_exit_one() {
    let d = TempDir::new().unwrap();
    let out = run_in(d.path(), "spectrum", r#"{"physics": {"beta": 0.25}, "grid": {"n_piont": 12}}"#, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_piont"));
    let out = run_in(d.path(), "spectrum", "{\n  \"physics\": {\"beta\": 0.25,}\n}", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(abflux(&["spectrum", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(abflux(&["--help"]).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_one() {
    let d = TempDir::new().unwrap();
    let out = run_in(d.path(), "evolve", r#"{"physics": {"beta": 0}, "timing": {"dt": -1}}"#, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("timing.dt"));
}

#[test]
fn unusable_fringe_exits_two_with_diagnostic() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{"physics": {"beta": 0.25}, "grid": {"n_points": 256}, "timing": {"dt": 0.05, "t_final": 0.1}}"#;
    let out = run_in(d.path(), "interfere", cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let diag: Value = serde_json::from_str(&read(d.path(), "diagnostic.json")).unwrap();
    assert_eq!(diag["kind"], "unusable-fringe");
    assert_eq!(diag["exit_code"], 2);
}

#[test]
fn csv_files_use_lf_and_seventeen_digits() {
    let d = TempDir::new().unwrap();
    assert!(run_in(d.path(), "spectrum", r#"{"physics": {"beta": 0.25}, "grid": {"n_points": 512}}"#, &[]).status.success());
    let csv = read(d.path(), "spectrum.csv");
    assert!(!csv.contains('\r'));
    let e = &data_rows(&csv)[0][3];
    let mantissa = e.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{e}");
}
