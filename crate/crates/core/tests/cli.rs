use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn geolift(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_geolift"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("GEOLIFT_THREADS", "2")
        .current_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../../manifolds"))
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn results(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("results.json")).unwrap()).unwrap()
}

#[test]
fn exp_reports_point_and_domain_exit() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        geolift(
            &["exp", "--manifold", "euclid.toml", "--p", "0,0", "--v", "3,4"],
            dir.path()
        ),
        0
    );
    let r = results(dir.path());
    assert_eq!(r["status"], "reached");
    assert!((r["point"][0].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!((r["point"][1].as_f64().unwrap() - 4.0).abs() < 1e-12);

    assert_eq!(
        geolift(
            &["exp", "--manifold", "punctured-mink.toml", "--p", "0,0", "--v", "2,0"],
            dir.path()
        ),
        2
    );
    assert_eq!(results(dir.path())["status"], "left_domain");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        geolift(&["exp", "--manifold", "euclid.toml", "--p", "0,0"], dir.path()),
        1
    );
    assert_eq!(
        geolift(
            &["exp", "--manifold", "nowhere.toml", "--p", "0,0", "--v", "1,0"],
            dir.path()
        ),
        1
    );
    assert_eq!(
        geolift(
            &["exp", "--manifold", "euclid.toml", "--p", "0,0,0", "--v", "1,0"],
            dir.path()
        ),
        1
    );
    assert_eq!(geolift(&["frobnicate", "--manifold", "euclid.toml"], dir.path()), 1);
}

#[test]
fn antipode_lift_plots_a_plateau() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        geolift(
            &["lift", "--manifold", "sphere.toml", "--preset", "sphere-antipode"],
            dir.path()
        ),
        0
    );
    let r = results(dir.path());
    assert_eq!(r["lift"]["status"]["kind"], "global");
    assert_eq!(r["plateaus"].as_array().unwrap().len(), 1);
    let samples = r["lift"]["samples"].as_array().unwrap().len();
    assert_eq!(r["image"].as_array().unwrap().len(), samples);
    assert_eq!(r["gamma"].as_array().unwrap().len(), 401);
    let svg = std::fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert_eq!(svg.matches("fill-opacity").count(), 1);
    assert!(!dir.path().join("witness.json").exists());
}

#[test]
fn inextensible_and_budget_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        geolift(
            &["lift", "--manifold", "punctured-mink", "--path", "0,0;1,0.3;2,0"],
            dir.path()
        ),
        2
    );
    let w: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("witness.json")).unwrap()).unwrap();
    assert_eq!(w["status"]["kind"], "inextensible_in_domain");

    let dir = tempfile::tempdir().unwrap();
    let args = [
        "lift",
        "--manifold",
        "euclid",
        "--path",
        "0,0;3,0",
        "--max-arclength",
        "1",
    ];
    assert_eq!(geolift(&args, dir.path()), 3);
    assert_eq!(results(dir.path())["lift"]["status"]["kind"], "budget_exhausted");
}

#[test]
fn continuation_check_on_punctured_plane_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "check-continuation",
        "--manifold",
        "punctured-plane",
        "--p",
        "0,0",
        "--length",
        "8",
        "--budget",
        "64",
    ];
    assert_eq!(geolift(&args, dir.path()), 2);
    assert_eq!(results(dir.path())["verdict"], "fail");
    assert!(dir.path().join("witness.json").exists());
}

#[test]
fn torus_enumeration_is_deterministic() {
    let args = [
        "enumerate",
        "--manifold",
        "torus.toml",
        "--p",
        "0,0",
        "--q",
        "0.5,0",
        "--want",
        "5",
    ];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(geolift(&args, a.path()), 0);
    assert_eq!(geolift(&args, b.path()), 0);
    assert_eq!(results(a.path())["solutions"].as_array().unwrap().len(), 5);
    for f in ["results.json", "plot.svg"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn connection_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "connect",
        "--manifold",
        "euclid",
        "--p",
        "0,0",
        "--q",
        "3,4",
        "--via",
        "2,-1",
    ];
    assert_eq!(geolift(&args, dir.path()), 0);
    assert!((results(dir.path())["length"].as_f64().unwrap() - 5.0).abs() < 1e-10);

    let args = ["minimal", "--manifold", "torus", "--p", "0.1,0.1", "--q", "0.9,0.2"];
    assert_eq!(geolift(&args, dir.path()), 0);
    assert!((results(dir.path())["solution"]["length"].as_f64().unwrap() - 0.05f64.sqrt()).abs() < 1e-9);

    let args = ["avez", "--manifold", "minkowski", "--p", "0,0", "--q", "2,0"];
    assert_eq!(geolift(&args, dir.path()), 0);
    assert!((results(dir.path())["proper_time"].as_f64().unwrap() - 2.0).abs() < 1e-8);

    let args = ["avez", "--manifold", "punctured-mink", "--p", "0,0", "--q", "2,0"];
    assert_eq!(geolift(&args, dir.path()), 2);
    assert!(dir.path().join("witness.json").exists());
}
