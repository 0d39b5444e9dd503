use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_toric-extremal"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const UNIT: &str = r#"{
  "polytope": {"normals": [[1], [-1]], "offsets": [0, 1]},
  "weights": {"v": {"0": 1}, "w": {"0": 4}},
  "output": {"formats": ["json", "csv"]}
}"#;

const DESTABILIZED: &str = r#"{
  "polytope": {"normals": [[1], [-1]], "offsets": [0, 1]},
  "weights": {"v": {"0": 1}, "w": {"0": 36, "1": -192, "2": 192}}
}"#;

const NOT_DELZANT: &str = r#"{
  "polytope": {"normals": [[1, 0], [0, 1], [-1, -2]], "offsets": [0, 0, 2]},
  "fibration": {"factors": []}
}"#;

#[test]
fn certify_writes_report_and_phi_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "unit.json", UNIT);
    let out_path = dir.path().join("report.json");
    let out = run(&["certify", cfg.to_str().unwrap(), "--report", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_path);
    assert_eq!(r["command"], "certify");
    assert_eq!(r["verdict"], "EXISTS");
    let phi = &r["evidence"]["solve_1d"]["phi"]["coeffs"];
    assert_eq!(phi["1"], 2);
    assert_eq!(phi["2"], -2);
    for key in ["command", "verdict", "evidence", "residuals", "timing"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,phi,u_minus_u0"));
    assert_eq!(lines.count(), 257);
}

#[test]
fn check_delzant_reports_the_determinant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", NOT_DELZANT);
    let out = run(&["check-delzant", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("determinant -2"), "{err}");
}

#[test]
fn stability_scan_exits_two_on_destabilizer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", DESTABILIZED);
    let csv = dir.path().join("neg.csv");
    let out = run(&["stability-scan", cfg.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["verdict"], "NOT_STABLE");
    let negs = r["evidence"]["scan"]["negatives"].as_array().unwrap();
    assert!(!negs.is_empty());
    assert!(negs.iter().all(|s| s["futaki"].as_f64().unwrap() < 0.0));
    let csv = std::fs::read_to_string(csv).unwrap();
    assert!(csv.starts_with("h1,c,futaki,l1\n"));
}

#[test]
fn scan_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "unit.json", UNIT);
    let out = run(&["stability-scan", cfg.to_str().unwrap(), "--offsets", "17", "--refine", "false"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["evidence"]["options"]["offsets"], 17);
    assert_eq!(r["evidence"]["options"]["refine"], false);
    assert_eq!(r["verdict"], "UNDECIDED");
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"polytope": {"normals": [[1], [-1]], "offsets": [0, 1]}, "fibration": {"factors": []}, "solver": {"grid": 4}}"#,
    );
    let out = run(&["solve-1d", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.grid"));
}

#[test]
fn solver_errors_propagate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"polytope": {"normals": [[1], [-1]], "offsets": [0, 1]}, "weights": {"v": {"0": 1}, "w": {"0": 5}}}"#,
    );
    let out = run(&["solve-1d", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not normalized"));
}

#[test]
fn reports_differ_only_in_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "unit.json", UNIT);
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    let a = strip(run(&["solve-1d", cfg.to_str().unwrap()]));
    let b = strip(run(&["solve-1d", cfg.to_str().unwrap()]));
    assert_eq!(a, b);
}

#[test]
fn remaining_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(
        dir.path(),
        "tri.json",
        r#"{
          "polytope": {"normals": [[1, 0], [0, 1], [-1, -1]], "offsets": [0, 0, 1]},
          "fibration": {"factors": [{"p": [1, 2], "c": 2, "d": 1, "scal": 0}]},
          "test_function": {"kind": "crease", "h": [1, 0], "c": "1/3"},
          "potential": {"type": "guillemin"}
        }"#,
    );
    let t = tri.to_str().unwrap();
    for cmd in ["check-delzant", "extremal", "futaki", "mabuchi"] {
        let out = run(&[cmd, t]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let r: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(r["command"], cmd);
    }
    let out = run(&["solve-ak", t, "--degree", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["verdict"], "EXISTS");
    assert!(r["residuals"]["pde_resampled"].as_f64().unwrap() <= 1e-8);

    let scen = write(
        dir.path(),
        "scen.json",
        r#"{
          "polytope": {"normals": [[1], [-1]], "offsets": [0, 1]},
          "scenario": {"factors": [{"p": [1], "curve": {"genus": 1, "area": 1.0}}], "class_sweep": [[2], [3]]}
        }"#,
    );
    let out = run(&["scenario", scen.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["evidence"]["exists"], 2);
    assert_eq!(r["evidence"]["entries"][0]["certificate_hash"].as_str().unwrap().len(), 64);
}
