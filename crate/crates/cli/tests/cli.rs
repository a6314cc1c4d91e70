use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringbif"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn equilibrium_reports_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["equilibrium", "--n", "5", "--mu", "1", "--json", "e.json"]);
    assert_eq!(code(&out), 0);
    let v = read_json(&dir.path().join("e.json"));
    assert!((v["omega"].as_f64().unwrap() - 3.0).abs() < 1e-14);
    assert!(v["grad_norm"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["positions"].as_array().unwrap().len(), 6);
}

#[test]
fn invalid_ring_size_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["equilibrium", "--n", "1"])), 2);
    assert_eq!(code(&run(dir.path(), &["stability", "--n", "2"])), 2);
}

#[test]
fn blocks_match_for_negative_mu() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["blocks", "--n", "6", "--mu", "-1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bifurcations_of_bare_square() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["bifurcations", "--n", "4", "--mu", "0", "--json", "b.json", "--csv", "b.csv"]);
    assert_eq!(code(&out), 0);
    let v = read_json(&dir.path().join("b.json"));
    let points = v["points"].as_array().unwrap();
    let k2: Vec<f64> = points.iter().filter(|p| p["k"] == 2).map(|p| p["nu0"].as_f64().unwrap()).collect();
    assert_eq!(k2.len(), 1);
    assert!((k2[0] - 2f64.sqrt()).abs() < 1e-12);
    for p in points {
        assert_eq!(p["eta"], -1);
    }
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.starts_with("k,nu,eta,symmetry,provenance,det_residual,label"));
    assert_eq!(csv.lines().count(), points.len() + 1);
}

#[test]
fn filament_points_alternate_sign() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["bifurcations", "--kind", "filament", "--n", "5", "--mu", "1", "--gamma", "3", "--k", "1", "--json", "f.json"],
    );
    assert_eq!(code(&out), 0);
    let v = read_json(&dir.path().join("f.json"));
    let etas: Vec<i64> = v["points"].as_array().unwrap().iter().map(|p| p["eta"].as_i64().unwrap()).collect();
    assert_eq!(etas, vec![-1, -1, 1, 1]);
}

#[test]
fn degenerate_parameter_fails_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["bifurcations", "--n", "5", "--mu", "4"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("degenerate"));
}

#[test]
fn stability_window_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["stability", "--n", "7", "--check-mu", "4", "--json", "s.json"]);
    assert_eq!(code(&out), 0);
    let v = read_json(&dir.path().join("s.json"));
    assert_eq!(v["mu_lower"].as_f64(), Some(0.0));
    assert_eq!(v["mu_upper"].as_f64(), Some(9.0));
    assert_eq!(v["check"]["spectral_ok"], true);

    let out = run(dir.path(), &["stability", "--n", "7", "--check-mu", "20", "--json", "t.json"]);
    assert_eq!(code(&out), 0);
    let v = read_json(&dir.path().join("t.json"));
    assert_eq!(v["check"]["inside_window"], false);
    assert_eq!(v["check"]["spectral_ok"], false);
}

#[test]
fn spectrum_writes_grid_and_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["spectrum", "--n", "4", "--mu", "0.5", "--k", "2", "--grid", "20", "--csv", "sp.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sp.csv")).unwrap();
    assert!(csv.lines().count() > 20);
    assert!(dir.path().join("sp.gp").exists());
}

#[test]
fn short_branch_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["branch", "--n", "4", "--mu", "0", "--k", "2", "--steps", "3", "--json", "br.json", "--csv", "br.csv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("br.json"));
    let states = v["states"].as_array().unwrap();
    assert_eq!(states.len(), 4);
    for s in states {
        assert!(s["residual_norm"].as_f64().unwrap() < 1e-10);
        assert!(s["symmetry_residual"].as_f64().unwrap() < 1e-8);
    }
    assert!(dir.path().join("br.csv").exists());
    assert!(dir.path().join("br_modes.csv").exists());
}

#[test]
fn zero_amplitude_branch_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["branch", "--n", "4", "--mu", "0", "--k", "2", "--amplitude", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_conserves_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["simulate", "--n", "7", "--mu", "4", "--perturb", "1e-4", "--t-end", "200"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("drift.json"));
    for q in v["drift"]["quantities"].as_array().unwrap() {
        assert!(q["max_drift"].as_f64().unwrap() < 1e-8, "{q}");
    }
    let header = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,x0,y0,"));
}

#[test]
fn simulate_without_central_circulation_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "--n", "3", "--mu", "0"])), 2);
}

#[test]
fn filament_trajectory_has_velocities() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--kind", "filament", "--n", "4", "--mu", "1", "--gamma", "2", "--t-end", "50", "--csv", "f.csv"],
    );
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 1 + 4 * 5);
    assert!(header.contains("vx0"));
}
