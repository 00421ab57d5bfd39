//! Exit codes and output files of the `starflow` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use starflow_cli::formats::{field_text, CSV_HEADER};
use starflow_core::grid::{GridMode, SphereGrid};

fn starflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starflow")).args(args).output().unwrap()
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "\
grid.mode = axisymmetric
grid.n_theta = 32
curvature.kind = sigma_k
radii.r1 = 0.8
radii.r2 = 1.0
flow.safety = 1.0
";

fn run_with(body: &str, args: &[&str]) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), body);
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--config", cfg.to_str().unwrap()]);
    let out = starflow(&full);
    (dir, out)
}

#[test]
fn missing_config_exits_2() {
    let out = starflow(&["solve", "--config", "/nonexistent/run.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_exits_2() {
    let (_d, out) = run_with("radii.r1 = 1\nradii.r2 = 1\nflow.unknown = 3\n", &["check-f"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn linear_prescribed_function_fails_check_f() {
    let (_d, out) = run_with(&format!("{SMALL}prescribed.p = 1\ninitial.radius = 0.9\n"), &["check-f"]);
    assert_eq!(out.status.code(), Some(1));
    let (_d, out) = run_with(&format!("{SMALL}prescribed.p = 2\ninitial.radius = 0.9\n"), &["check-f"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn steady_sphere_solves_immediately() {
    let (dir, out) = run_with(&format!("{SMALL}initial.radius = 1.0\n"), &["solve"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert!(dir.path().join("out/certificates.json").exists());
    assert!(dir.path().join("out/final_field.txt").exists());
}

#[test]
fn inadmissible_start_exits_2_unless_forced() {
    let body = format!("{SMALL}initial.radius = 1.2\nflow.t_max = 0.05\n");
    let (_d, out) = run_with(&body, &["check-init"]);
    assert_eq!(out.status.code(), Some(1));
    let (dir, out) = run_with(&body, &["solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out/series.csv").exists());
    // forced, the run stops at the horizon
    let (_d, out) = run_with(&body, &["solve", "--force"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn snapshot_meshes_are_written() {
    let body = format!("{SMALL}initial.radius = 0.8\nflow.t_max = 0.2\n");
    let (dir, out) = run_with(&body, &["solve", "--snapshot-times", "0,0.1"]);
    assert_eq!(out.status.code(), Some(4));
    for name in ["surface_t0.obj", "surface_t0.1.obj"] {
        let obj = fs::read_to_string(dir.path().join("out").join(name)).unwrap();
        assert!(obj.lines().any(|l| l.starts_with("f ")));
    }
}

#[test]
fn dented_surface_leaves_the_cone() {
    let dir = tempfile::tempdir().unwrap();
    let grid = SphereGrid::new(GridMode::Axisymmetric, 32, 1).unwrap();
    let rho = grid.field_from_fn(|n| 1.0 - 0.4 * (-(n.theta / 0.4).powi(2)).exp());
    fs::write(dir.path().join("dent.txt"), field_text(&grid, &rho)).unwrap();
    let body = "grid.mode = axisymmetric\ngrid.n_theta = 32\ncurvature.k = 2\nprescribed.p = 3\n\
                radii.r1 = 0.5\nradii.r2 = 1.0\ninitial.kind = file\ninitial.file = dent.txt\n";
    let cfg = config(dir.path(), body);
    let cfg = cfg.to_str().unwrap();
    let out = starflow(&["check-init", "--config", cfg]);
    assert_eq!(out.status.code(), Some(1));
    let out = starflow(&["solve", "--force", "--config", cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("out/postmortem_field.txt").exists());
}

#[test]
fn selftest_catches_a_broken_hessian() {
    assert_eq!(starflow(&["selftest"]).status.code(), Some(0));
    assert_eq!(starflow(&["selftest", "--mutate", "hessian"]).status.code(), Some(1));
}

#[test]
fn export_writes_a_mesh() {
    let (dir, out) = run_with(&format!("{SMALL}initial.radius = 0.9\n"), &["export"]);
    assert_eq!(out.status.code(), Some(0));
    let obj = fs::read_to_string(dir.path().join("out/surface.obj")).unwrap();
    assert!(obj.starts_with("# radial surface"));
}
