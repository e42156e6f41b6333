use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn polypack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polypack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write(name: &str, contents: &str) -> String {
    let p = tmp(name);
    std::fs::write(&p, contents).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn result(report: &Value, name: &str) -> Value {
    report["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == name)
        .unwrap_or_else(|| panic!("no result {name}"))["value"]
        .clone()
}

fn tangent_pair() -> String {
    write(
        "tangent_pair.json",
        r#"{"ambient_dim":3,"cores":[
            {"basepoint":[0,0,0],"directions":[[0,0,1]]},
            {"basepoint":[2,0,0],"directions":[[0,1,0]]}]}"#,
    )
}

#[test]
fn polycylinder_bound_report() {
    let out = polypack(&["--json", "bound", "polycylinder"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let bound = result(&r, "bound").as_f64().unwrap();
    assert!((bound - 6.0 / (29.0 - 16.0 * 2f64.sqrt())).abs() < 1e-12);
    assert!(r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));
    assert!(r.get("wall_time").is_none());
}

#[test]
fn sphere_and_blichfeldt_bounds() {
    let r = json(&polypack(&["--json", "bound", "sphere", "--n", "3"]));
    assert!((result(&r, "bound").as_f64().unwrap() - 5.0 / 32f64.sqrt()).abs() < 1e-12);
    let out = polypack(&[
        "--json",
        "bound",
        "blichfeldt",
        "--gauge",
        "f1",
        "--dim",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let b = result(&json(&out), "bound").as_f64().unwrap();
    assert!((b - 0.9415334406924533).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(polypack(&["bound", "sphere"]).status.code(), Some(2));
    assert_eq!(
        polypack(&["bound", "sphere", "--n", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(polypack(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        polypack(&["sweep", "lemmas", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        polypack(&["pack", "validate", "/nonexistent/packing.json"])
            .status
            .code(),
        Some(2)
    );
    let garbage = write("garbage.json", "{not json");
    assert_eq!(polypack(&["slice", &garbage]).status.code(), Some(2));
}

#[test]
fn overlapping_packing_exits_3() {
    let f = write(
        "overlapping.json",
        r#"{"ambient_dim":2,"cores":[
            {"basepoint":[0,0],"directions":[]},
            {"basepoint":[1.5,0],"directions":[]}]}"#,
    );
    let out = polypack(&["--json", "pack", "validate", &f]);
    assert_eq!(out.status.code(), Some(3));
    let v = result(&json(&out), "violations");
    let v = v.as_array().unwrap();
    assert_eq!(v.len(), 1);
    assert!((v[0]["distance"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(polypack(&["slice", &f]).status.code(), Some(3));
    assert_eq!(
        polypack(&["pack", "density", &f, "--samples", "10"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn invalid_gauge_exits_4() {
    let f = write("wide.json", r#"{"breakpoints":[0,1.5],"pieces":[[1]]}"#);
    let out = polypack(&["--json", "bound", "blichfeldt", "--gauge", &f]);
    assert_eq!(out.status.code(), Some(4));
    assert!(result(&json(&out), "max_sigma").as_f64().unwrap() > 1.0);
}

#[test]
fn hexagonal_slice_and_svg() {
    let hex = tmp("hex.json");
    let hex = hex.to_str().unwrap();
    assert!(polypack(&["pack", "hexagonal", "--n", "1", "--out", hex])
        .status
        .success());
    let svg_a = tmp("a.svg");
    let svg_b = tmp("b.svg");
    for (core, svg) in [("0", &svg_a), ("0", &svg_b)] {
        let out = polypack(&[
            "--json",
            "slice",
            hex,
            "--core",
            core,
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let r = json(&out);
        assert_eq!(result(&r, "bounded"), Value::Bool(true));
        assert!((result(&r, "area").as_f64().unwrap() - 12f64.sqrt()).abs() < 1e-9);
        let rmin = result(&r, "min_vertex_radius").as_f64().unwrap();
        assert!((rmin - 2.0 / 3f64.sqrt()).abs() < 1e-9);
    }
    let a = std::fs::read_to_string(&svg_a).unwrap();
    assert_eq!(a, std::fs::read_to_string(&svg_b).unwrap());
    for group in ["unit-circle", "vertex-circle", "arcs", "vertices"] {
        assert!(a.contains(&format!("id=\"{group}\"")), "missing {group}");
    }
}

#[test]
fn tangent_pair_reaches_the_chord_angle_bound() {
    let f = tangent_pair();
    let out = polypack(&["--json", "slice", &f]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let angle = result(&r, "max_chord_angle_deg").as_f64().unwrap();
    let closed = 2.0 * (3f64.sqrt() - 1.0).acos().to_degrees();
    assert!((angle - closed).abs() < 1e-9);
    // Two cylinders leave the slice unbounded; the area is a clipped lower bound.
    assert_eq!(result(&r, "bounded"), Value::Bool(false));
    assert_eq!(result(&r, "area_is_lower_bound"), Value::Bool(true));
}

#[test]
fn square_density_control() {
    let sq = tmp("square2d.json");
    let sq = sq.to_str().unwrap();
    assert!(polypack(&["pack", "square", "--out", sq]).status.success());
    let out = polypack(&["--json", "pack", "density", sq, "--r", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let d = result(&r, "density").as_f64().unwrap();
    assert!((d - std::f64::consts::FRAC_PI_4).abs() < 0.01);
    assert_eq!(r["seed"], 0);
}

#[test]
fn reports_are_reproducible() {
    let args = [
        "--json",
        "sweep",
        "transversality",
        "--trials",
        "200",
        "--seed",
        "3",
    ];
    let a = polypack(&args);
    let b = polypack(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let mut seq = vec!["--sequential"];
    seq.extend_from_slice(&args);
    assert_eq!(polypack(&seq).stdout, a.stdout);
    let threads = Command::new(env!("CARGO_BIN_EXE_polypack"))
        .env("POLYPACK_THREADS", "2")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(threads.stdout, a.stdout);
}

#[test]
fn text_report_lists_checks() {
    let out = polypack(&["sweep", "gauges", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS sigma(f0) at most 1"));
    assert!(text.contains("seed:"));
    assert!(text.contains("wall time"));
}
