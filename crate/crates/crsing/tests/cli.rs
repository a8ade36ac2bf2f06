//! The `crclassify` binary: exit-code protocol, output formats and
//! byte-identical JSON.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crclassify")).args(args).env_remove("CRCLASSIFY_TOL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_tmp(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crclassify-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
    p
}

fn pair_json(r: [f64; 4], ri: [f64; 4], s: [f64; 4]) -> String {
    format!(
        r#"{{"R": {{"rows": 2, "cols": 2, "re": {:?}, "im": {:?}}}, "S": {{"rows": 2, "cols": 2, "re": {:?}, "im": [0, 0, 0, 0]}}}}"#,
        r, ri, s
    )
}

#[test]
fn classify_rows() {
    let p = write_tmp("definite.json", &pair_json([1.0, 0.0, 0.0, 1.0], [0.0; 4], [0.1, 0.0, 0.0, 0.2]));
    let o = bin(&["classify", "--input", p.to_str().unwrap(), "--output", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["form"], "DefiniteDiag");
    let cols: Vec<_> = ["rho_p", "rho_np", "rho_gamma", "sigma_gamma"].iter().map(|k| v[k].as_u64().unwrap()).collect();
    assert_eq!(cols, [2, 2, 4, 4]);
    assert_eq!(v["det_sign"], "+");

    let p = write_tmp("zero.json", &pair_json([0.0; 4], [0.0; 4], [0.5, 0.0, 0.0, 0.5]));
    let o = bin(&["classify", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("ZeroId"), "{text}");
    assert!(text.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["2", "2", "4", "0", "+"]), "{text}");
}

#[test]
fn exit_codes() {
    let bad = write_tmp("bad.json", "{\"R\": ");
    let o = bin(&["classify", "--input", bad.to_str().unwrap(), "--output", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["error"], "parse");

    assert_eq!(bin(&["classify"]).status.code(), Some(1));
    assert_eq!(bin(&["verify", "--tol", "0.1"]).status.code(), Some(1));
    assert_eq!(bin(&["locate", "--builtin", "s4", "--seeds", "1"]).status.code(), Some(1));
    assert_eq!(bin(&["locate", "--builtin", "s4", "--d", "1,2,3"]).status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_crclassify")).args(["verify"]).env("CRCLASSIFY_TOL", "1").output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    // θ = 1e-10 lies within tolerance of θ = 0 and is snapped
    let t: f64 = 1e-10;
    let p = write_tmp("snap.json", &pair_json([1.0, 0.0, 0.0, t.cos()], [0.0, 0.0, 0.0, t.sin()], [0.0; 4]));
    assert_eq!(bin(&["classify", "--input", p.to_str().unwrap()]).status.code(), Some(2));

    // z₃ = |z₁|² + ½(z₁² + z̄₁²) + |z₂|² + z̄₁³: a parabolic point at 0
    let degenerate = r#"{"name": "parabolic", "charts": [{"id": "graph",
      "num": {"nvars": 2, "trunc": 4, "terms": [
        {"alpha": [1, 0], "beta": [1, 0], "re": 1.0, "im": 0.0},
        {"alpha": [2, 0], "beta": [0, 0], "re": 0.5, "im": 0.0},
        {"alpha": [0, 0], "beta": [2, 0], "re": 0.5, "im": 0.0},
        {"alpha": [0, 1], "beta": [0, 1], "re": 1.0, "im": 0.0},
        {"alpha": [0, 0], "beta": [3, 0], "re": 1.0, "im": 0.0}]},
      "den": {"nvars": 2, "trunc": 4, "terms": [{"alpha": [0, 0], "beta": [0, 0], "re": 1.0, "im": 0.0}]},
      "domain_box": [[-1, 1], [-1, 1], [-1, 1], [-1, 1]]}]}"#;
    let p = write_tmp("degenerate.json", degenerate);
    assert_eq!(bin(&["locate", "--input", p.to_str().unwrap(), "--seeds", "4"]).status.code(), Some(3));
}

#[test]
fn locate_builtins() {
    let o = bin(&["locate", "--builtin", "s4", "--d", "1,2,3,4,5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("(2 CR points)") && text.contains("I+ = 1, I- = 1"), "{text}");

    let o = bin(&["locate", "--builtin", "s2xs2", "--abc", "1,2,1,3,5,1"]);
    let text = stdout(&o);
    assert!(text.contains("(4 CR points)") && text.matches("index +1").count() == 4, "{text}");

    let a = bin(&["locate", "--builtin", "cp2", "--t", "1", "--output", "json"]);
    let b = bin(&["locate", "--builtin", "cp2", "--t", "1", "--output", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "JSON output is not byte-identical");
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["enumeration"]["points"].as_array().unwrap().len(), 7);

    // under the switched convention the sum and difference identities trade places
    let o = bin(&["locate", "--builtin", "cp2", "--convention", "switched", "--output", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v["topology"]["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"I+ - I- = chi+4d^2") && names.contains(&"I+ + I- = 6d+d^3"), "{names:?}");
    assert_eq!(v["topology"]["pass"], true);
}

#[test]
fn flatten_round_trip() {
    let mut h = String::from(r#"{"nvars": 2, "trunc": 3, "terms": ["#);
    let mut terms = vec![
        ([1, 0], [1, 0], 1.0),
        ([0, 1], [0, 1], 1.0),
        ([2, 0], [0, 0], 0.2),
        ([0, 0], [2, 0], 0.2),
        ([0, 2], [0, 0], 0.4),
        ([0, 0], [0, 2], 0.4),
        ([3, 0], [0, 0], 0.7),
        ([1, 1], [1, 0], 0.3),
    ];
    // z₁z̄₁z₂ pairs with z₁z̄₁z̄₂
    terms.push(([1, 0], [1, 1], 0.3));
    let body: Vec<String> = terms
        .iter()
        .map(|(a, b, v)| format!(r#"{{"alpha": {a:?}, "beta": {b:?}, "re": {v}, "im": 0.0}}"#))
        .collect();
    h.push_str(&body.join(", "));
    h.push_str("]}");
    let p = write_tmp("series.json", &h);
    let o = bin(&["flatten", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let cubic: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("cubic part")).skip(1).take_while(|l| l.starts_with("  e")).collect();
    assert!(cubic.iter().all(|l| ["e2010", "e0201", "e1020", "e0102"].iter().any(|m| l.contains(m))), "{text}");

    // break z₁z̄₁² = conj(z₁²z̄₁)
    let broken = h.replacen("]}", r#", {"alpha": [1, 0], "beta": [2, 0], "re": 0.5, "im": 0.0}]}"#, 1);
    let p = write_tmp("broken.json", &broken);
    let o = bin(&["flatten", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("e1200"));
}

#[test]
fn verify_suite() {
    let o = bin(&["verify"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.matches("[PASS]").count(), 10, "{text}");

    let o = bin(&["verify", "--tol", "1e-15", "--output", "json"]);
    assert_eq!(o.status.code(), Some(4));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], false);
    assert!(v["criteria"].as_array().unwrap().iter().any(|c| c["pass"] == false));
}
