use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thetalat")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn corpus_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn corpus_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = run(&["--seed", "7", "--threads", threads, "corpus", "--rank", "3", "--count", "5", "--bound", "3", "--out", dir.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let (fa, fb) = (corpus_files(&a), corpus_files(&b));
    assert_eq!(fa.len(), 5);
    assert_eq!(fa, fb);
    assert_eq!(fa[0].0, "lattice_r3_000.json");
}

#[test]
fn transference_audit_over_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("c");
    assert!(run(&["--seed", "7", "corpus", "--rank", "3", "--count", "5", "--out", dir.to_str().unwrap()]).status.success());
    let out = run(&["audit", "--suite", "transference", "--corpus", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> = String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    for l in &lines {
        let v = l["verdict"].as_str().unwrap();
        assert!(["verified", "verified_up_to_bound", "not_applicable"].contains(&v), "{l}");
    }
    let items: std::collections::BTreeSet<_> = lines.iter().map(|l| l["item"].as_str().unwrap().to_owned()).collect();
    assert_eq!(items.len(), 5);
}

#[test]
fn oscillator_entropy_matches_planck_inverse() {
    for e in [0.75f64, 1.0, 3.0] {
        let v = stdout_json(&run(&["entropy", "--builtin", "oscillator", "--E", &e.to_string()]));
        // U = hν/2 + hν/(e^{βhν} − 1) with h = ν = 1.
        let beta = (1.0 + 1.0 / (e - 0.5)).ln();
        let s = beta * e - beta / 2.0 - (1.0 - (-beta).exp()).ln();
        assert!((v["beta"].as_f64().unwrap() - beta).abs() < 1e-9, "{v}");
        assert!((v["S"].as_f64().unwrap() - s).abs() < 1e-9, "{v}");
    }
}

#[test]
fn invariants_of_a2() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("a2.json");
    fs::write(&p, r#"{"rank":2,"gram":[["2","1"],["1","2"]]}"#).unwrap();
    let v = stdout_json(&run(&["invariants", "--lattice", p.to_str().unwrap()]));
    assert!((v["covolume"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-12);
    for m in v["minima"].as_array().unwrap() {
        assert!((m.as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn exact_count_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("two.json");
    fs::write(&p, r#"{"unit":1,"atoms":[{"e":0,"w":1},{"e":1,"w":1}]}"#).unwrap();
    let v = stdout_json(&run(&["an", "--measure", p.to_str().unwrap(), "--E", "0.5", "--n", "4"]));
    let row = if v.is_array() { v[0].clone() } else { v };
    assert!((row["log_an"].as_f64().unwrap() - 11f64.ln()).abs() < 1e-12, "{row}");
    let v = stdout_json(&run(&["an", "--measure", p.to_str().unwrap(), "--E", "0.25", "--n", "4"]));
    let row = if v.is_array() { v[0].clone() } else { v };
    assert!((row["log_an"].as_f64().unwrap() - 5f64.ln()).abs() < 1e-12, "{row}");
    assert!(row["S"].as_f64().is_some());
    let out = run(&["--format", "csv", "entropy", "--builtin", "geometric", "--E", "1", "--E", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().next().unwrap().contains("beta"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"rank":2,"gram":[["1","2"],["2","1"]]}"#).unwrap();
    assert_eq!(run(&["invariants", "--lattice", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["invariants", "--lattice", tmp.path().join("missing.json").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["entropy", "--builtin", "geometric", "--E", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["audit", "--suite", "transference", "--lattice", bad.to_str().unwrap()]).status.code(), Some(2));
    let out = run(&["--budget", "2", "audit", "--suite", "transference", "--rank", "3", "--count", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"error\""));
}

#[test]
fn lattice_profile_at_given_beta() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("z.json");
    fs::write(&p, r#"{"rank":1,"gram":[["1"]]}"#).unwrap();
    let v = stdout_json(&run(&["entropy", "--builtin", "lattice", "--lattice", p.to_str().unwrap(), "--beta", "0.5", "--beta", "2"]));
    for row in v.as_array().unwrap() {
        let b = row["beta"].as_f64().unwrap();
        let theta: f64 = (-200i64..=200).map(|k| (-std::f64::consts::PI * b * (k * k) as f64).exp()).sum();
        assert!((row["psi"].as_f64().unwrap() - theta.ln()).abs() < 1e-12, "{row}");
    }
}
