use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plqp::measures::io::save_density;
use plqp::measures::{indicator_box, make_ramp_ball, ramp_ball_l2, ramp_ball_tv, shift_density, GridSpec};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn plqp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plqp")).args(args).output().unwrap()
}

fn plqp_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plqp")).args(args).env(key, val).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ball_pair(dir: &Path) -> (PathBuf, PathBuf) {
    let spec = GridSpec::square(-1.5, 1.5, 48).unwrap();
    let a = make_ramp_ball(&spec, [-0.25, 0.0], 0.6, 0.25).unwrap();
    let b = shift_density(&a, [8.0, 0.0]).unwrap();
    let (pa, pb) = (dir.join("a.csv"), dir.join("b.csv"));
    save_density(&pa, &a).unwrap();
    save_density(&pb, &b).unwrap();
    (pa, pb)
}

const TWO_BALL: &str = r#"{
  "anchor": {"kind": "multiball", "grid": {"lo": -3, "hi": 3, "cells": 48},
             "centers": [[-1.5, 0], [1.5, 0]], "radii": [1, 1], "weights": [0.75, 0.25], "width": 0.25},
  "tau": 0.1,
  "steps": 4
}"#;

#[test]
fn dist_of_identical_files_is_zero() {
    let dir = TempDir::new().unwrap();
    let (a, _) = ball_pair(dir.path());
    let v = json(&plqp(&["dist", "--q", "inf", "--p", "inf", s(&a), s(&a)]));
    assert_eq!(v["total"].as_f64().unwrap(), 0.0);
}

#[test]
fn dist_of_shifted_indicators() {
    let dir = TempDir::new().unwrap();
    let spec = GridSpec::interval(-1.0, 3.0, 200).unwrap();
    let h = spec.h();
    let f = indicator_box(&spec, [0.0 + h / 2.0, 0.0], [1.0 - h / 2.0, 0.0]).unwrap();
    let g = indicator_box(&spec, [0.5 + h / 2.0, 0.0], [1.5 - h / 2.0, 0.0]).unwrap();
    let (pf, pg) = (dir.path().join("f.csv"), dir.path().join("g.csv"));
    save_density(&pf, &f).unwrap();
    save_density(&pg, &g).unwrap();
    let v = json(&plqp(&["dist", "--q", "1", "--p", "1", s(&pf), s(&pg)]));
    assert!((v["total"].as_f64().unwrap() - 1.5).abs() <= 2.0 * h, "{v}");
    assert_eq!(v["metric_params_valid"], Value::Bool(false));
}

#[test]
fn atom_lists_are_accepted() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    fs::write(&a, r#"{"dim": 2, "points": [[0, 0], [1, 0]], "weights": [0.5, 0.5]}"#).unwrap();
    fs::write(&b, r#"{"dim": 2, "points": [[0, 3], [1, 3]], "weights": [0.5, 0.5]}"#).unwrap();
    let v = json(&plqp(&["dist", s(&a), s(&b)]));
    assert!((v["transport"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!(v["lebesgue"].is_null());
}

#[test]
fn missing_file_exits_2_naming_the_path() {
    let dir = TempDir::new().unwrap();
    let (a, _) = ball_pair(dir.path());
    let missing = dir.path().join("nowhere.csv");
    let out = plqp(&["dist", s(&a), s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&missing)));
}

#[test]
fn malformed_grid_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "this is not a grid\n").unwrap();
    let out = plqp(&["isop", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn isop_of_ball_matches_radial_oracle() {
    let dir = TempDir::new().unwrap();
    let spec = GridSpec::square(-2.0, 2.0, 256).unwrap();
    let g = make_ramp_ball(&spec, [0.0, 0.0], 1.0, 0.1).unwrap();
    let p = dir.path().join("ball.csv");
    save_density(&p, &g).unwrap();
    let v = json(&plqp(&["isop", s(&p)]));
    let oracle = ramp_ball_tv(1.0, 0.1) / ramp_ball_l2(1.0, 0.1);
    let got = v["isop"]["value"].as_f64().unwrap();
    assert!((got / oracle - 1.0).abs() < 0.03, "{got} vs {oracle}");
}

fn check_manifest(dir: &Path) {
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let files = m["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let bytes = fs::read(dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), f["sha256"].as_str().unwrap());
    }
    let listed = files.len() + 1;
    assert_eq!(fs::read_dir(dir).unwrap().count(), listed);
}

#[test]
fn mms_ledger_is_monotone_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("two_ball.json");
    fs::write(&cfg, TWO_BALL).unwrap();
    let (o1, o2) = (dir.path().join("run1"), dir.path().join("run2"));
    let v = json(&plqp(&["--out", s(&o1), "mms", "--config", s(&cfg)]));
    let steps = v["ledger"]["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 4);
    let mut prev = v["ledger"]["phi0"].as_f64().unwrap();
    for st in steps {
        let phi = st["phi"].as_f64().unwrap();
        assert!(phi <= prev + 1e-12);
        prev = phi;
    }
    check_manifest(&o1);
    json(&plqp(&["--out", s(&o2), "mms", "--config", s(&cfg)]));
    assert_eq!(fs::read(o1.join("mms.json")).unwrap(), fs::read(o2.join("mms.json")).unwrap());
    assert_eq!(fs::read(o1.join("manifest.json")).unwrap(), fs::read(o2.join("manifest.json")).unwrap());
}

#[test]
fn mms_local_family_honours_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("ball.json");
    fs::write(
        &cfg,
        r#"{"anchor": {"kind": "box", "grid": {"lo": 0, "hi": 1, "cells": 10}, "lo": [0.25, 0.35], "hi": [0.65, 0.75]},
            "tau": 0.5, "steps": 1,
            "template": {"phi": {"kind": "isop"}, "family": {"kind": "grid_local_search", "budget": 30, "quantum": 0.005, "seed": 1}}}"#,
    )
    .unwrap();
    let a = json(&plqp(&["mms", "--config", s(&cfg), "--seed", "9"]));
    assert_eq!(a["template"]["family"]["seed"], 9);
    assert_eq!(plqp(&["mms", "--config", s(&cfg), "--seed", "9"]).stdout, plqp(&["mms", "--config", s(&cfg), "--seed", "9"]).stdout);
}

#[test]
fn solver_failure_exits_3_and_cleans_up() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("off.json");
    fs::write(
        &cfg,
        r#"{"anchor": {"kind": "ramp_ball", "grid": {"lo": -3, "hi": 3, "cells": 48}, "center": [0.03, 0], "radius": 1, "width": 0.25},
            "tau": 0.1, "steps": 2}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = plqp(&["--out", s(&out_dir), "mms", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_dir.exists());
}

#[test]
fn atom_cap_from_environment() {
    let dir = TempDir::new().unwrap();
    let (a, b) = ball_pair(dir.path());
    let out = plqp_env(&["dist", s(&a), s(&b)], "PLQP_MAX_ATOMS", "10");
    assert_eq!(out.status.code(), Some(3));
    let out = plqp_env(&["dist", s(&a), s(&b)], "PLQP_MAX_ATOMS", "ten");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bb_report_satisfies_lower_bound() {
    let dir = TempDir::new().unwrap();
    let (a, b) = ball_pair(dir.path());
    let v = json(&plqp(&["bb", "--steps", "8", s(&a), s(&b)]));
    assert_eq!(v["lower_bound_holds"], Value::Bool(true));
    assert!((v["winf"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn curve_then_reconstruct() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("curve.json");
    fs::write(
        &cfg,
        r#"{"anchor": {"kind": "ramp_ball", "grid": {"lo": -2, "hi": 2, "cells": 32}, "center": [-0.5, 0], "radius": 0.8, "width": 0.25},
            "curve": {"kind": "translate", "velocity": [0.5, 0]}, "steps": 4}"#,
    )
    .unwrap();
    let c = dir.path().join("curve");
    let v = json(&plqp(&["--out", s(&c), "curve", "--config", s(&cfg)]));
    assert!(v["residual"]["max_defect"].as_f64().unwrap().is_finite());
    check_manifest(&c);
    let r = dir.path().join("rec");
    let v = json(&plqp(&["--out", s(&r), "reconstruct", s(&c.join("trajectory.json"))]));
    for x in v["per_step_norm"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 0.5).abs() < 1e-9);
    }
    check_manifest(&r);
}

#[test]
fn oracle_agrees() {
    let v = json(&plqp(&["oracle", "--count", "100", "--seed", "4"]));
    assert_eq!(v["passed"], Value::Bool(true));
}
