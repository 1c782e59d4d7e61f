use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_donorgraph")).arg("--out").arg(out).args(args).output().unwrap()
}

fn code(out: &Path, args: &[&str]) -> i32 {
    run(out, args).status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn version_is_embedded_in_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let v = Command::new(env!("CARGO_BIN_EXE_donorgraph")).arg("--version").output().unwrap();
    let id = String::from_utf8(v.stdout).unwrap().trim().to_string();
    assert!(id.starts_with("donorgraph "));
    assert_eq!(code(dir.path(), &["spectrum"]), 0);
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# {id}"));
}

#[test]
fn protocol_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(p, &["protocol", "verify", "--protocol", "linear", "--d", "2", "--n", "3"]), 0);
    let rep = json(&p.join("verification.json"));
    assert_eq!(rep["pass"], Value::Bool(true));
    assert_eq!(code(p, &["protocol", "verify", "--protocol", "six-ring", "--d", "2"]), 0);
    assert_eq!(code(p, &["protocol", "verify", "--protocol", "single-photon", "--d", "4"]), 0);
    assert_eq!(code(p, &["protocol", "verify", "--protocol", "ladder-literal", "--d", "2"]), 4);
    assert_eq!(code(p, &["protocol", "run", "--protocol", "linear", "--d", "9"]), 5);
    assert_eq!(code(p, &["protocol", "run", "--protocol", "six-ring", "--d", "8"]), 5);
    assert_eq!(code(p, &["protocol", "run", "--protocol", "linear", "--d", "1"]), 2);
}

#[test]
fn fusion_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(p, &["fusion", "--d", "3", "--trials", "5000"]), 0);
    let f = json(&p.join("fusion.json"));
    assert!((f["p_success"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(f["chain"]["outcome"]["success"], Value::Bool(true));
    assert_eq!(code(p, &["fusion", "--d", "1"]), 2);
    assert_eq!(code(p, &["fusion", "--d", "2", "--chain-n", "3"]), 2);

    assert_eq!(code(p, &["compare", "--d", "4", "--target", "ring6"]), 0);
    let c = json(&p.join("compare.json"));
    assert!((c["schemeA"]["expected_attempts"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    assert_eq!(c["schemeB"]["deterministic"], Value::Bool(true));
}

#[test]
fn budget_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(p, &["budget", "--sweep", "Qi=1e5:1e6:log10"]), 0);
    let b = json(&p.join("budget.json"));
    assert_eq!(b["timing"]["duration_us"]["max"].as_f64(), Some(0.0));
    assert_eq!(b["timing"]["fidelity"].as_f64(), Some(1.0));
    assert!((b["loss"]["loss"].as_f64().unwrap() - 0.0189).abs() < 5e-4);
    let sweep = fs::read_to_string(p.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("100000,"));

    // a program with a CZ cannot be priced from the single-donor table
    assert_eq!(code(p, &["protocol", "run", "--protocol", "six-ring", "--d", "2"]), 0);
    let prog = p.join("program.json");
    let prog = prog.to_str().unwrap();
    assert_eq!(code(p, &["budget", "--program", prog, "--table", "table1"]), 2);
    assert_eq!(code(p, &["budget", "--program", prog, "--table", "table3"]), 0);
    let trace = p.join("trace.json");
    assert_eq!(code(p, &["budget", "--program", trace.to_str().unwrap(), "--table", "coupled-donors"]), 0);

    fs::write(p.join("list.json"), r#"[{"op":"esr","emitter":0,"control":0}]"#).unwrap();
    let list = p.join("list.json");
    let out = run(p, &["budget", "--program", list.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = json(&p.join("budget.json"));
    assert_eq!(b["timing"]["fidelity"].as_f64(), Some(0.995));
    assert_eq!(code(p, &["budget", "--table", "missing.json"]), 2);
}

#[test]
fn spectrum_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(p, &["spectrum", "--kind", "edsr"]), 0);
    let e = json(&p.join("edsr_check.json"));
    assert_eq!(e["reference_mhz"].as_f64(), Some(28_410.0));
    assert_eq!(code(p, &["spectrum", "--device", "double", "--kind", "edsr", "--spectator", "weak-fixed"]), 0);
    let t = fs::read_to_string(p.join("transitions.csv")).unwrap();
    assert_eq!(t.lines().count(), 2 + 7);
    fs::write(p.join("empty.json"), "").unwrap();
    let empty = p.join("empty.json");
    assert_eq!(code(p, &["spectrum", "--params", empty.to_str().unwrap()]), 2);
    assert_eq!(code(p, &["sweep"]), 0);
}
