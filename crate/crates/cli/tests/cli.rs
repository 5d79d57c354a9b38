use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use sphere_inspect::curve::Curve3;
use sphere_inspect::inspection::{baseball_seam, SeamSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sphere-inspect"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_with_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn seam_pipes_into_inspect() {
    let seam = run(&["seam", "--arcs", "256"]);
    assert!(seam.status.success());
    let report = json(&run_with_stdin(&["inspect", "--samples", "100000", "--center", "0,0,0"], &seam.stdout));
    assert_eq!(report["inspects"], Value::Bool(true));
    assert!((report["inradius"].as_f64().unwrap() - 1.0).abs() < 1e-4);
}

#[test]
fn seam_file_round_trips_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seam.json");
    let out = run(&["seam", "--arcs", "33", "--scale", "1.7", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    let read = Curve3::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let direct = baseball_seam(&SeamSpec::new(33, 1.7).unwrap()).unwrap();
    assert_eq!(read.points(), direct.points());
    assert_eq!(read.to_json(), direct.to_json());
}

#[test]
fn edge_table_stays_below_two() {
    let out = run(&["table", "--grid", "200"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h0,h1,E"));
    let mut max = f64::NEG_INFINITY;
    let mut rows = 0;
    for l in lines {
        let e: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        max = max.max(e);
        rows += 1;
    }
    assert_eq!(rows, 200 * 201 / 2);
    assert!(max <= 2.0 + 1e-9 && max > 1.9999);
    let phase = run(&["table", "--grid", "20", "--kind", "phase"]);
    let text = String::from_utf8(phase.stdout).unwrap();
    assert!(text.starts_with("h,alpha,E\n"));
    assert_eq!(text.lines().count(), 401);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["inspect", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["horizon", "--samples", "10"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let seam = run(&["seam", "--arcs", "4"]).stdout;
    assert_eq!(run_with_stdin(&["inspect", "--scheme", "uniform"], &seam).status.code(), Some(2));
    assert_eq!(run(&["verify", "--seed", "1", "--only", "11"]).status.code(), Some(2));
}

#[test]
fn malformed_curves_exit_with_one_and_a_line_number() {
    let out = run_with_stdin(&["inspect"], b"{\"closed\": true,\n \"points\": [[2,0,0],\n [0,2,0],\n [0,0,]]}");
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
    let out = run_with_stdin(&["inspect"], b"{\"closed\": true,\n \"points\": [[2,0,0],\n [0,2,0],\n [0,2]]}");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    let out = run(&["inspect", "--curve", "/nonexistent/curve.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn domain_errors_exit_with_one() {
    let inside = b"{\"closed\": true, \"points\": [[0.5,0,0],[0,2,0],[0,0,2]]}";
    assert_eq!(run_with_stdin(&["horizon", "--seed", "1", "--samples", "100"], inside).status.code(), Some(1));
    assert_eq!(run(&["efficiency", "--h", "0.5"]).status.code(), Some(1));
    assert_eq!(run(&["seam", "--arcs", "1"]).status.code(), Some(1));
}

#[test]
fn horizon_does_not_depend_on_threads() {
    let seam = run(&["seam", "--arcs", "8"]).stdout;
    let args = ["horizon", "--seed", "5", "--samples", "50000"];
    let one = run_with_stdin(&[&["--threads", "1"][..], &args[..]].concat(), &seam);
    let three = run_with_stdin(&[&["--threads", "3"][..], &args[..]].concat(), &seam);
    assert_eq!(one.stdout, three.stdout);
    let v = json(&one);
    let closed = v["closed_form"].as_f64().unwrap();
    let se = v["standard_error"].as_f64().unwrap();
    assert!((v["value"].as_f64().unwrap() - closed).abs() <= 3.0 * se);
}

#[test]
fn efficiency_modes() {
    let v = json(&run(&["efficiency", "--h", "1.4142135623730951"]));
    assert!((v["efficiency"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let v = json(&run(&["efficiency", "--h0", "1", "--h1", "3"]));
    assert!((v["efficiency"].as_f64().unwrap() - 1.480961).abs() < 1e-6);
    let seam = run(&["seam", "--arcs", "64"]).stdout;
    let v = json(&run_with_stdin(&["efficiency"], &seam));
    assert!((v["efficiency"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    let v = json(&run_with_stdin(&["efficiency", "--seed", "2", "--samples", "20000"], &seam));
    assert!(v["length_over_4pi"].as_f64().unwrap() < 1.0);
    assert!(v["spirals"].is_object());
}

#[test]
fn unfold_and_spirals() {
    let dir = tempfile::tempdir().unwrap();
    let planar = dir.path().join("planar.json");
    let curve = b"{\"closed\": true, \"points\": [[2,0,0],[0,2.5,0.3],[-2,0,1],[0,-2,0]]}";
    let v = json(&run_with_stdin(&["unfold", "-o", planar.to_str().unwrap()], curve));
    assert!(v["length_error"].as_f64().unwrap() < 1e-12);
    let text = std::fs::read_to_string(&planar).unwrap();
    let s = json(&run(&["spirals", "--curve", planar.to_str().unwrap()]));
    assert!(!s["pieces"].as_array().unwrap().is_empty());
    assert!(text.contains("\"closed\": false"));
    let s3 = json(&run_with_stdin(&["spirals"], curve));
    assert_eq!(s["pieces"].as_array().unwrap().len(), s3["pieces"].as_array().unwrap().len());
}

#[test]
fn crofton_of_normalized_seam() {
    let seam = run(&["seam", "--arcs", "64"]).stdout;
    let v = json(&run_with_stdin(
        &["crofton", "--seed", "3", "--samples", "200000", "--normalize"],
        &seam,
    ));
    let target = 4.0 * std::f64::consts::PI / std::f64::consts::SQRT_2;
    assert!((v["length"].as_f64().unwrap() - target).abs() <= 3.0 * v["standard_error"].as_f64().unwrap() + 1e-3);
    assert_eq!(run_with_stdin(&["crofton", "--seed", "3", "--samples", "100"], &seam).status.code(), Some(1));
}

#[test]
fn shorten_writes_curve_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let start = dir.path().join("start.json");
    let out = dir.path().join("out.json");
    let trace = dir.path().join("trace.csv");
    assert!(run(&["seam", "--arcs", "8", "--scale", "1.3", "-o", start.to_str().unwrap()]).status.success());
    let args = [
        "shorten",
        "--curve",
        start.to_str().unwrap(),
        "--iters",
        "40",
        "--seed",
        "9",
        "--samples",
        "3000",
        "-o",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ];
    let v = json(&run(&args));
    assert!(v["final_length"].as_f64().unwrap() < v["initial_length"].as_f64().unwrap());
    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,length,step,feasible,min_support"));
    let lengths: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(lengths.windows(2).all(|w| w[1] <= w[0]));
    let final_curve = Curve3::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(final_curve.length(), *lengths.last().unwrap());
    let again = run(&args);
    assert_eq!(std::fs::read_to_string(&trace).unwrap(), csv);
    assert!(again.status.success());
}

#[test]
fn verify_single_criterion() {
    let out = run(&["verify", "--seed", "7", "--samples", "10000", "--only", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("[PASS]  5."));
    let out = run(&["verify", "--seed", "7", "--only", "4", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["id"], 4);
}
