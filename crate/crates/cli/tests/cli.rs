use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn folia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_folia")).args(args).output().expect("folia runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn scene(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name).to_string_lossy().into_owned()
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("folia-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn bott_closed_forms() {
    let out = folia(&["bott", "--q", "1", "--lambda", "1,0", "1,0"]);
    assert!(out.status.success());
    assert_eq!(report(&out)["result"]["display"], "4+0i");
    let out = folia(&["bott", "--q", "2", "--lambda", "1", "1", "1"]);
    assert_eq!(report(&out)["result"]["value"][0], 27.0);
}

#[test]
fn bott_rejects_hull_containing_origin() {
    let out = folia(&["bott", "--lambda", "1,0", "-1,0"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert!(r["error"].as_str().unwrap().contains("convex hull"));
}

#[test]
fn bott_weight_count_must_match_q() {
    let out = folia(&["bott", "--q", "2", "--lambda", "1", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_on_scene_file() {
    let out = folia(&["check", &scene("t3_tilted.scene"), "--samples", "64", "--resolution", "16"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(&out);
    let gv = r["result"]["gv"]["value"].as_f64().unwrap();
    let want = -(2.0 * std::f64::consts::PI).powi(3);
    assert!((gv - want).abs() < 1e-9 * want.abs());
    assert_eq!(r["seed"], 20_130_501);
    assert_eq!(r["tolerances"]["identities"], 1e-9);
}

#[test]
fn reports_are_deterministic() {
    let args = ["gv", "random_q1", "--resolution", "12", "--samples", "16"];
    let a = folia(&args);
    let b = folia(&args);
    let c = Command::new(env!("CARGO_BIN_EXE_folia")).args(args).env("FOLIA_THREADS", "1").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn malformed_scene_is_located() {
    let dir = scratch("bad");
    std::fs::create_dir_all(&dir).unwrap();
    let src = std::fs::read_to_string(scene("t3_tilted.scene")).unwrap().replace("\"sin(z)\"]]", "\"sin(z\"]]");
    let path = dir.join("bad.scene");
    std::fs::write(&path, src).unwrap();
    let out = folia(&["gv", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("forms.omega[1]"));
    let out = folia(&["gv", "no_such_scene"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reeb_family_writes_profiles_and_manifest() {
    let dir = scratch("family");
    let out = folia(&["reeb-family", "--A0", "1", "--A2", "0", "--A1", "0.125,0.25,0.375,0.5,0.625", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    for a1 in ["0.125", "0.25", "0.375", "0.5", "0.625"] {
        let csv = std::fs::read_to_string(dir.join(format!("profile_A1_{a1}.csv"))).unwrap();
        assert!(csv.starts_with("r,f,fprime,mu,residual\n"));
        assert!(csv.lines().count() > 100);
    }
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let r0: Vec<f64> = m["profiles"].as_array().unwrap().iter().map(|p| p["r0"].as_f64().unwrap()).collect();
    assert_eq!(r0.len(), 5);
    assert!(r0.iter().all(|r| r.is_finite() && *r > 0.0));
}

#[test]
fn reeb_profiles_are_critical() {
    let out = folia(&["critical", "reeb:A0=1,A1=0.25,A2=0", "--samples", "32"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = folia(&["critical", "reeb:lambda=1.5,A1=0.3,A2=0.1,A3=0.2", "--lambda", "1.5", "--samples", "32"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = folia(&["critical", "reeb:lambda=1.5,A1=0.3,A2=0.1,A3=0.2", "--lambda", "0.5", "--samples", "32"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn holo_check_separates_integrable_from_nonintegrable() {
    assert!(folia(&["holo-check", "--samples", "32"]).status.success());
    assert!(folia(&["holo-check", "reeb:A0=1,A1=0.25,A2=0", "--samples", "32"]).status.success());
    for s in ["t3_contact", "t3_tilted"] {
        assert_eq!(folia(&["holo-check", s, "--samples", "32"]).status.code(), Some(1));
    }
}
