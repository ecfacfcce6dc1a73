use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const S1_PLUS: &str = "u; v^2; v*(u^2+v^2)+s*v";
const HYPERBOLIC: &str = "u; v^2; u^2+v^3+u^2*v+s*v";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s1geom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn error_kind(out: &Output) -> String {
    json_of(out)["error"]["kind"].as_str().expect("error kind").to_string()
}

fn collect_floats(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => out.extend(n.as_f64()),
        Value::Array(a) => a.iter().for_each(|x| collect_floats(x, out)),
        Value::Object(m) => m.values().for_each(|x| collect_floats(x, out)),
        _ => {}
    }
}

#[test]
fn analyze_classifies_the_model() {
    let out = run(&["analyze", "--germ", S1_PLUS]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["classification"]["kind"], "S1Plus");
    assert_eq!(v["coefficients"]["c2_0"].as_f64(), Some(1.0));
}

#[test]
fn analyze_reads_umbrella_invariants() {
    let out = run(&["analyze", "--germ", "u; u*v; v^2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let a02 = v["umbrella"]["a02"].as_f64().expect("a02");
    assert!((a02 - 2.0).abs() < 1e-12, "{a02}");
}

#[test]
fn germ_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("germ.txt");
    std::fs::write(&path, "# model\nu\nv^2\nv*(u^2-v^2)+s*v\n").unwrap();
    let out = run(&["analyze", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["classification"]["kind"], "S1Minus");
}

#[test]
fn bad_input_maps_to_exit_codes() {
    let out = run(&["analyze", "--germ", "u; v"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "parse");

    let out = run(&["normal-form", "--germ", S1_PLUS, "--order", "20"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");

    let out = run(&["mesh", "--germ", S1_PLUS, "--resolution", "1x1"]);
    assert_eq!(out.status.code(), Some(2));

    // fold curve off the v = 0 axis
    let out = run(&["normal-form", "--germ", "u; v^2+v*s; v*(u^2+v^2)+s*v"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "precondition");
}

#[test]
fn help_exits_cleanly() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("normal-form"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["--seed", "17", "normal-form", "--germ", S1_PLUS, "--check-invariance", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let dev = json_of(&a)["invariance"]["max_deviation"].as_f64().unwrap();
    assert!(dev < 1e-8, "{dev}");
}

#[test]
fn printed_floats_round_trip() {
    let out = run(&["trace", "--germ", HYPERBOLIC]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut floats = Vec::new();
    collect_floats(&json_of(&out), &mut floats);
    assert!(floats.len() > 50);
    for x in floats {
        let printed = format!("{x:.16e}");
        assert_eq!(printed.parse::<f64>().unwrap(), x);
        assert!(text.contains(&printed) || x.fract() == 0.0, "{printed} not in output");
    }
}

#[test]
fn trace_and_focal_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["trace", "--germ", HYPERBOLIC, "--s-tilde-grid", "0.1:0.5:5", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(Path::new(d).join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(Path::new(d).join("trace.json").exists());

    let ex = "u; -u^2+v^2; u^2+v^3+v*s+u^2*v";
    let out = run(&["focal", "--germ", ex, "--s", "-1", "--out", d]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json_of(&out)["kind"], "ellipse");
    let svg = std::fs::read_to_string(Path::new(d).join("focal.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn gauss_probe_agrees() {
    let out = run(&["gauss-probe", "--germ", "u; v^2+u*s; u^2+v^3+u^2*v+v*s"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["agreement"].as_f64(), Some(1.0));
}

#[test]
fn mesh_goes_to_stdout() {
    let out = run(&["mesh", "--germ", S1_PLUS, "--s", "-0.1", "--resolution", "4x3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 12);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 12);
}

#[test]
fn library_entry_point_matches_binary() {
    let mut buf = Vec::new();
    let code = s1geom::cli::run(["s1geom", "analyze", "--germ", S1_PLUS], &mut buf);
    assert_eq!(code, 0);
    assert_eq!(buf, run(&["analyze", "--germ", S1_PLUS]).stdout);
}
