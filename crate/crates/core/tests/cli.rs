use std::fs;
use std::path::Path;
use std::process::Command;

use idxray::grid::io::read_sinogram;
use serde_json::Value;

fn idxray(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_idxray")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn scenario(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const DISK: &str = r#"{
  "domain": {"xmin": -1.5, "xmax": 1.5, "ymin": -1.5, "ymax": 1.5},
  "grid": {"nx": 64, "ny": 64},
  "sinogram": {"np": 151, "ntheta": 36, "pmax": 1.5},
  "quad": {"h": 1e-3},
  "f": [{"type": "disk", "radius": 1.0}]
}"#;

#[test]
fn empty_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "empty.json", "");
    let out = dir.path().join("out");
    let (code, msg) = idxray(&["forward", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{msg}");
}

#[test]
fn schema_violation_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "bad.json", r#"{"grid": {"nx": "many", "ny": 4}}"#);
    let (code, msg) = idxray(&["forward", "--scenario", &s, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(msg.contains("grid.nx"), "{msg}");
}

#[test]
fn oversized_disk_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "big.json", r#"{"f": [{"type": "disk", "radius": 4.0}]}"#);
    let (code, msg) = idxray(&["forward", "--scenario", &s, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 3, "{msg}");
}

#[test]
fn forward_matches_chord_length_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "disk.json", DISK);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let (code, msg) = idxray(&["forward", "--scenario", &s, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{msg}");
    }
    let sino = read_sinogram(&a.join("sinogram.json")).unwrap();
    let g = *sino.geometry();
    let mut err = 0.0f64;
    for j in 0..g.ntheta {
        for i in 0..g.np {
            let p = g.p(i);
            if p.abs() <= 0.99 {
                err = err.max((sino.get(i, j) - 2.0 * (1.0 - p * p).sqrt()).abs());
            }
        }
    }
    assert!(err < 5e-3, "{err}");
    for name in ["manifest.json", "sinogram.f64", "sinogram.pgm", "forward.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let m = manifest(&a);
    assert_eq!(m["command"], "forward");
    assert_eq!(m["status"], "ok");
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o["file"] == "sinogram.f64"));
}

const ANNULUS: &str = r#"{
  "domain": {"xmin": -1, "xmax": 1, "ymin": -1, "ymax": 1},
  "grid": {"nx": 64, "ny": 64},
  "sinogram": {"np": 65, "ntheta": 64, "pmax": 1},
  "symbol": "ex_radial",
  "region": {"type": "annulus", "r_in": 0.4, "r_out": 0.8}
}"#;

#[test]
fn trap_reports_trapped_annulus_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "annulus.json", ANNULUS);
    let out = dir.path().join("out");
    let (code, msg) = idxray(&["trap", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{msg}");
    assert!(msg.contains("TRAPPED"));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("trap.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "TRAPPED");
    assert!(fs::read_to_string(out.join("witness.csv")).unwrap().lines().count() > 10);
}

#[test]
fn violated_assertion_exits_4_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "annulus.json", ANNULUS);
    let out = dir.path().join("out");
    let (code, msg) = idxray(&["trap", "--expect", "non-trapping", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 4, "{msg}");
    assert_eq!(manifest(&out)["status"], "guard-failed");

    let out = dir.path().join("recon");
    let (code, _) = idxray(&["reconstruct", "--assume-non-trapping", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert!(!out.join("g1.json").exists());
}

#[test]
fn equivalent_source_reproduces_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(
        dir.path(),
        "eq.json",
        r#"{
          "sinogram": {"np": 161, "ntheta": 8, "pmax": 1.6},
          "quad": {"h": 1e-3},
          "a": [{"type": "disk", "radius": 1.0, "amplitude": 0.5, "mollify_width": 0.05}],
          "f": [{"type": "disk", "radius": 1.0, "mollify_width": 0.05}]
        }"#,
    );
    let out = dir.path().join("out");
    let (code, msg) = idxray(&["equivalent-source", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{msg}");
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("equivalent_source.json")).unwrap()).unwrap();
    assert!(r["residual_ratio"].as_f64().unwrap() < 1e-3, "{r}");
    assert!(out.join("f0.csv").exists());
}

#[test]
fn reconstruct_on_gap_annulus() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(
        dir.path(),
        "gap.json",
        r#"{
          "domain": {"xmin": -1, "xmax": 1, "ymin": -1, "ymax": 1},
          "grid": {"nx": 32, "ny": 32},
          "sinogram": {"np": 65, "ntheta": 64, "pmax": 1},
          "symbol": "ex_radial",
          "region": {"type": "annulus", "r_in": 0.4, "r_out": 0.8, "gap_center_deg": 0, "gap_half_width_deg": 30},
          "perturbations": {
            "da": [{"type": "bump", "center": [0, 0.6], "radius": 0.2}],
            "df": [{"type": "bump", "center": [-0.6, 0], "radius": 0.2}]
          }
        }"#,
    );
    let out = dir.path().join("out");
    let (code, msg) = idxray(&["reconstruct", "--assume-non-trapping", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{msg}");
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let hist = r["residual_history"].as_array().unwrap();
    assert!(hist.len() > 2);
    assert!(r["relative_error"].as_f64().unwrap() < 0.5, "{r}");
    assert!(fs::read_to_string(out.join("history.csv")).unwrap().starts_with("k,residual,error"));
}

#[test]
fn rays_on_model_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "annulus.json", ANNULUS);
    let out = dir.path().join("out");
    let (code, msg) = idxray(&["rays", "--from", "0.5,0", "--from", "0,0", "--lmax", "4", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{msg}");
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("rays.json")).unwrap()).unwrap();
    assert!(r[0]["radius_drift"].as_f64().unwrap() < 1e-6, "{r}");
    assert_eq!(r[1]["termination"], "stationary-projection");
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, msg) = idxray(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{msg}");
    assert!(!msg.contains("FAIL"));
}
