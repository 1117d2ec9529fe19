use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const PROJECTIVE: &str = r#"{"dimension": 2, "operators": [
  [[[1,0],[0,0]],[[0,0],[0,0]]],
  [[[0,0],[0,0]],[[0,0],[1,0]]]]}"#;

const GENERAL: &str = r#"{"dimension": 2, "operators": [
  [[[0.836660026534,0],[0,0]],[[0,0],[0.547722557505,0]]],
  [[[0.547722557505,0],[0,0]],[[0,0],[0,0.836660026534]]]]}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn weakwalk(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_weakwalk")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_projective() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "p.json", PROJECTIVE);
    let (code, out, _) = weakwalk(&["validate", s(&f)]);
    assert_eq!(code, 0);
    assert!(out.contains("class: Projective"), "{out}");
}

#[test]
fn validate_reports_completeness_residual() {
    let dir = TempDir::new().unwrap();
    let v = 0.495f64.sqrt();
    let text = format!(
        r#"{{"dimension": 2, "operators": [[[[{v},0],[0,0]],[[0,0],[{v},0]]], [[[{v},0],[0,0]],[[0,0],[{v},0]]]]}}"#
    );
    let f = write(&dir, "short.json", &text);
    let (code, out, _) = weakwalk(&["validate", s(&f)]);
    assert_eq!(code, 1);
    let expected = 0.01 * 2f64.sqrt();
    let residual: f64 = out.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((residual - expected).abs() < 1e-9, "{out}");
}

#[test]
fn validate_malformed_json() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.json", "{\"dimension\": 2, \"operators\": [");
    assert_eq!(weakwalk(&["validate", s(&f)]).0, 2);
    assert_eq!(weakwalk(&["validate", "/nonexistent/file.json"]).0, 2);
}

#[test]
fn validate_three_outcomes() {
    let dir = TempDir::new().unwrap();
    let third = (1.0f64 / 3.0).sqrt();
    let op = format!("[[[{third},0],[0,0]],[[0,0],[{third},0]]]");
    let f = write(&dir, "m.json", &format!(r#"{{"dimension": 2, "operators": [{op},{op},{op}]}}"#));
    let (code, out, _) = weakwalk(&["validate", s(&f)]);
    assert_eq!(code, 0);
    assert!(out.contains("3 outcomes"));
}

#[test]
fn simulate_writes_reports() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "p.json", PROJECTIVE);
    let state = write(&dir, "s.json", r#"{"dimension": 2, "psi": [[0.5477225575051661,0],[0.8366600265340756,0]]}"#);
    let report = dir.path().join("report.json");
    let rows = dir.path().join("rows.jsonl");
    let csv = dir.path().join("report.csv");
    let (code, out, err) = weakwalk(&[
        "simulate", "--instrument", s(&inst), "--state", s(&state), "--epsilon", "0.2", "--threshold", "4",
        "--trajectories", "2000", "--seed", "5", "--out", s(&report), "--trajectories-out", s(&rows), "--csv",
        s(&csv), "--log-steps",
    ]);
    assert_eq!(code, 0, "{out}{err}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["nTrajectories"], 2000);
    assert!((json["targetProbs"][0].as_f64().unwrap() - 0.3).abs() < 1e-12);
    let lines: Vec<String> = std::fs::read_to_string(&rows).unwrap().lines().map(String::from).collect();
    assert_eq!(lines.len(), 2000);
    let first: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(first["index"], 0);
    assert_eq!(first["stepLog"].as_array().unwrap().len() as u64, first["steps"].as_u64().unwrap());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);

    // same seed, same report apart from the clock
    let again = dir.path().join("again.json");
    weakwalk(&[
        "simulate", "--instrument", s(&inst), "--state", s(&state), "--epsilon", "0.2", "--threshold", "4",
        "--trajectories", "2000", "--seed", "5", "--out", s(&again),
    ]);
    let mut a: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let mut b: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&again).unwrap()).unwrap();
    a["wallClock"] = 0.into();
    b["wallClock"] = 0.into();
    assert_eq!(a, b);
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "p.json", PROJECTIVE);
    let base = ["simulate", "--instrument", s(&inst), "--epsilon", "0.1", "--seed", "1"];
    let run = |extra: &[&str]| weakwalk(&[&base[..], extra].concat()).0;
    assert_eq!(run(&["--threshold", "4", "--trajectories", "0"]), 2);
    assert_eq!(run(&["--threshold", "19.95", "--trajectories", "100"]), 2);
    assert_eq!(run(&["--threshold", "-1", "--trajectories", "100"]), 2);
}

#[test]
fn verify_suites() {
    assert_eq!(weakwalk(&["verify", "nonsense"]).0, 2);
    let (code, out, _) = weakwalk(&["verify", "hitting"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("all checks passed"));
    let (code, out, _) = weakwalk(&["verify", "identities", "--seeds", "100"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn curve_prints_operators() {
    let dir = TempDir::new().unwrap();
    let proj = write(&dir, "p.json", PROJECTIVE);
    let (code, out, _) = weakwalk(&["curve", "--instrument", s(&proj), "--x", "0.3", "--y", "0"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.707106781187 0i"), "{out}");

    // projective: M(0, 0.1) = P(0.1) = diag(√((1 − tanh 0.1)/2), √((1 + tanh 0.1)/2))
    let (_, out, _) = weakwalk(&["curve", "--instrument", s(&proj), "--x", "0", "--y", "0.1"]);
    let m1 = ((1.0 - 0.1f64.tanh()) / 2.0).sqrt();
    let m2 = ((1.0 + 0.1f64.tanh()) / 2.0).sqrt();
    assert!(out.contains(&weakwalk::cli::sig12(m1)), "{out}");
    assert!(out.contains(&weakwalk::cli::sig12(m2)), "{out}");

    let gen = write(&dir, "g.json", GENERAL);
    let (code, out, _) = weakwalk(&["curve", "--instrument", s(&gen), "--x", "-1", "--y", "0.2"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("[General]"));
    assert!(out.contains("polar unitary residual"));

    assert_eq!(weakwalk(&["curve", "--instrument", s(&proj), "--x", "19.9", "--y", "0.5"]).0, 2);
}

#[test]
fn in_process_entry_point() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = weakwalk::cli::run(["weakwalk", "verify", "hitting"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().contains("hitting X=4 eps=0.5"));
}
