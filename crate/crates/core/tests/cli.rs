use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liftmap"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn orbits_on_ex1() {
    let v = json(&run(&["orbits", path(&fixture("ex1.fgm"))]));
    assert_eq!(v["group_order"], 4);
    assert_eq!(v["node_orbits"], 2);
    assert_eq!(v["edge_orbits"], 2);
    assert_eq!(v["arc_orbits"], 3);
    assert_eq!(v["lifted_cells"], 11);
    assert_eq!(v["generators_verified"], true);
    assert_eq!(v["partitions"][0]["domain"], "vars");
}

#[test]
fn lifted_cycle_map_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.json");
    let csv = dir.path().join("bounds.csv");
    let status = run(&[
        "map",
        path(&fixture("triangle.fgm")),
        "--space",
        "lifted",
        "--polytope",
        "cycle",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["status"], "converged");
    assert_eq!(v["space"], "lifted");
    assert_eq!(v["polytope"], "cycle");
    assert!((v["objective"].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert!(v["cuts"].as_u64().unwrap() >= 1);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,bound"));
    let bounds: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(bounds.len(), v["bounds"].as_array().unwrap().len());
    assert!((bounds.last().unwrap() + 1.0).abs() < 1e-8);
}

#[test]
fn cut_cap_exits_with_four() {
    let out = run(&[
        "map",
        path(&fixture("triangle.fgm")),
        "--polytope",
        "cycle",
        "--max-cuts",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "cap");
}

#[test]
fn exact_on_unary_model() {
    let v = json(&run(&["exact", path(&fixture("unary.fgm"))]));
    assert!((v["map_value"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    let p = 1.0 / (1.0 + (-0.7f64).exp());
    assert!((v["mean_params"][1].as_f64().unwrap() - p).abs() < 1e-12);
}

#[test]
fn ground_dump_parses_back() {
    let out = run(&["ground", path(&fixture("q2.mln")), "--domain-size", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# var 0 "));
    let model = liftmap::model::parse_model(&text).unwrap();
    assert_eq!(model.num_vars(), 9);
}

#[test]
fn compare_reports_refinement() {
    let v = json(&run(&[
        "orbits",
        path(&fixture("lovers_smokers.mln")),
        "--domain-size",
        "3",
        "--compare",
    ]));
    assert_eq!(v["renaming_refines_search"], true);
    assert_eq!(v["renaming"]["method"], "renaming");
}

#[test]
fn input_errors_exit_with_two() {
    let missing = run(&["orbits", "/nonexistent/model.fgm"]);
    assert_eq!(missing.status.code(), Some(2));
    let no_domain = run(&["orbits", path(&fixture("q2.mln"))]);
    assert_eq!(no_domain.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_domain.stderr).contains("domain"));
    let renaming_fgm = run(&["orbits", path(&fixture("ex1.fgm")), "--method", "renaming"]);
    assert_eq!(renaming_fgm.status.code(), Some(2));
    let bad_alpha = run(&["map", path(&fixture("ex1.fgm")), "--alpha", "0"]);
    assert_eq!(bad_alpha.status.code(), Some(3));
}

#[test]
fn output_is_deterministic_apart_from_timings() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings_ms");
        v.as_object_mut().unwrap().remove("symmetry_ms");
        v
    };
    let lovers = fixture("lovers_smokers.mln");
    let args = [
        "map",
        path(&lovers),
        "--domain-size",
        "3",
        "--space",
        "lifted",
        "--polytope",
        "cycle",
    ];
    let a = strip(json(&run(&args)));
    let b = strip(json(&run(&args)));
    assert_eq!(a, b);
    let a = json(&run(&[
        "orbits",
        path(&fixture("frucht.fgm")),
        "--seed",
        "3",
    ]));
    let b = json(&run(&[
        "orbits",
        path(&fixture("frucht.fgm")),
        "--seed",
        "3",
    ]));
    assert_eq!(a, b);
}
