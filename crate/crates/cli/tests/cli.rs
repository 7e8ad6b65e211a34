use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pressure-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zeta_pressure_json() {
    let dir = tempfile::tempdir().unwrap();
    let phi = write(dir.path(), "phi.json", r#"{"head": [], "tail": {"a": -2, "k": 1}, "N0": 0}"#);
    let out = run(&["pressure", "--phi", s(&phi), "--tol", "1e-10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["meta"]["tool"], "pressure-lab");
    let r = &doc["result"];
    let want = (std::f64::consts::PI.powi(2) / 6.0).ln();
    assert!(r["lo"].as_f64().unwrap() <= want && want <= r["hi"].as_f64().unwrap());
    assert_eq!(r["infinite"], false);
}

#[test]
fn divergent_pressure_is_reported_infinite() {
    let dir = tempfile::tempdir().unwrap();
    let phi = write(dir.path(), "phi.json", r#"{"head": [], "tail": {"a": -1, "k": 1}, "N0": 0}"#);
    let out = run(&["pressure", "--phi", s(&phi)]);
    assert!(out.status.success());
    assert_eq!(json(&out)["result"]["infinite"], true);
}

#[test]
fn example_then_locate_t0() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("onephase.json");
    let out = run(&["--out", s(&sys), "example", "--name", "onephase", "--k", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["locate-t0", "--system", s(&sys), "--tol", "1e-6"]);
    assert!(out.status.success());
    let r = &json(&out)["result"];
    assert_eq!(r["transition"], true);
    let (lo, hi) = (r["t0"]["lo"].as_f64().unwrap(), r["t0"]["hi"].as_f64().unwrap());
    assert!(-2.0 < lo && hi < -1.0, "{lo} {hi}");
}

#[test]
fn phase_scan_csv_contract_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("two.json");
    let body = r#"{"shift": {"kind": "full", "offset": 0},
        "roof": {"head": [1.0, 2.0], "N0": 2},
        "observable": {"head": [0.5, -0.5], "N0": 2}}"#;
    std::fs::write(&sys, body).unwrap();
    let args = ["phase-scan", "--system", s(&sys), "--t-min", "-1", "--t-max", "1", "--step", "0.5", "--tol", "1e-8"];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with("# "));
    let _: Value = serde_json::from_str(&head[2..]).unwrap();
    assert_eq!(lines.next().unwrap(), "t,lo,hi,regime,kink_flag");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(r.len(), 5);
        let lo: f64 = r[1].parse().unwrap();
        let hi: f64 = r[2].parse().unwrap();
        assert!(lo <= hi);
        assert!(["flat", "analytic", "critical", "boundary"].contains(&r[3]));
        assert!(r[4] == "0" || r[4] == "1");
    }
}

#[test]
fn count_scan_has_three_kinks() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("count.json");
    let out = run(&["--out", s(&sys), "example", "--name", "count", "--levels", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["phase-scan", "--system", s(&sys), "--t-min", "-5", "--t-max", "-1.5", "--step", "0.05", "--tol", "1e-6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let kinks: Vec<f64> = text
        .lines()
        .skip(2)
        .filter(|l| l.ends_with(",1"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(kinks, vec![-4.0, -3.0, -2.0]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // unreadable input
    let out = run(&["s-inf", "--system", s(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));
    // malformed json
    let bad = write(dir.path(), "bad.json", "{");
    assert_eq!(run(&["s-inf", "--system", s(&bad)]).status.code(), Some(1));
    // unknown flag
    assert_eq!(run(&["pressure", "--bogus"]).status.code(), Some(1));
    // roof not bounded away from zero
    let sys = write(
        dir.path(),
        "zero.json",
        r#"{"shift": {"kind": "full", "offset": 0},
            "roof": {"head": [0.0, 1.0], "N0": 2},
            "observable": {"head": [0.0, 0.0], "N0": 2}}"#,
    );
    let out = run(&["suspension", "--system", s(&sys), "--t", "0"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn equilibrium_verdicts_on_onephase() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("onephase.json");
    assert!(run(&["--out", s(&sys), "example", "--name", "onephase"]).status.success());
    let at = |t: &str| {
        let out = run(&["equilibrium", "--system", s(&sys), "--t", t]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        json(&out)["result"]["verdict"].as_str().unwrap().to_string()
    };
    assert_eq!(at("0"), "equilibrium");
    assert_eq!(at("-3"), "no_equilibrium");
}

#[test]
fn variational_seeded_weights_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("nophase.json");
    assert!(run(&["--out", s(&sys), "example", "--name", "nophase"]).status.success());
    let args = ["variational", "--system", s(&sys), "--t", "0", "--seed", "7", "--support", "20"];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run(&args).stdout);
}
