use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn emtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emtlab"))
        .args(args)
        .env_remove("EMTLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn scene(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn builtin(dir: &TempDir, name: &str, params: &str) -> PathBuf {
    let text = format!(r#"{{"builtin": "{name}", "fields": {{"params": {params}}}}}"#);
    scene(dir, &format!("{name}.json"), &text)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn off_vacuum_check_reports_a_witness() {
    let dir = TempDir::new().unwrap();
    let p = builtin(&dir, "higgs-vacuum-mexhat", r#"{"amp": 1.5}"#);
    let out = emtlab(&["check", "--scene", s(&p)]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(2), "{stdout}");
    assert!(stdout.contains("witness: Higgs SEC"), "{stdout}");
}

#[test]
fn dirac_plane_wave_verifies() {
    let dir = TempDir::new().unwrap();
    let p = builtin(&dir, "dirac-planewave-m4", "{}");
    let out = emtlab(&["verify", "--scene", s(&p)]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("weitzenboeck"));
}

#[test]
fn constant_field_classify_writes_csv() {
    let dir = TempDir::new().unwrap();
    let p = builtin(&dir, "minkowski-constant-em", "{}");
    let csv = dir.path().join("r.csv");
    let out = emtlab(&["classify", "--scene", s(&p), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("aggregate")).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.contains(",holds,")), "{text}");
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let p = builtin(&dir, "minkowski-constant-em", "{}");
    assert_eq!(emtlab(&["check", "--scene", s(&p), "--bogus"]).status.code(), Some(1));
    assert_eq!(emtlab(&["check", "--scene", "/nonexistent/scene.json"]).status.code(), Some(1));
    assert_eq!(emtlab(&["check", "--scene", s(&p), "--h", "-1"]).status.code(), Some(1));
    assert_eq!(emtlab(&["check", "--scene", s(&p), "--order", "3"]).status.code(), Some(1));
    let bad = scene(&dir, "bad.json", r#"{"dimension": 4, "colour": 1}"#);
    let out = emtlab(&["emt", "--scene", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    assert_eq!(emtlab(&["--help"]).status.code(), Some(0));
    assert_eq!(emtlab(&["--version"]).status.code(), Some(0));
}

#[test]
fn scan_and_json_output() {
    let dir = TempDir::new().unwrap();
    let p = builtin(&dir, "higgs-vacuum-mexhat", "{}");
    let json = dir.path().join("scan.json");
    let out = emtlab(&[
        "scan", "--scene", s(&p), "--param", "amp", "--from", "1", "--to", "1.5", "--steps", "2",
        "--out", s(&json),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["scan"].as_array().unwrap().len(), 2);
    assert_eq!(v["provenance"]["command"], "scan");
}

#[test]
fn classify_output_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let mut ok = true;
    for (name, params) in [
        ("higgs-vacuum-mexhat", r#"{"amp": 1.5}"#),
        ("dirac-planewave-m4", "{}"),
        ("desitter-conformal-higgs", "{}"),
    ] {
        let p = builtin(&dir, name, params);
        let mut outputs = Vec::new();
        for (i, threads) in ["1", "3", "8", "8"].iter().enumerate() {
            let json = dir.path().join(format!("{name}-{i}.json"));
            let csv = dir.path().join(format!("{name}-{i}.csv"));
            for out in [&json, &csv] {
                let o = emtlab(&[
                    "classify", "--scene", s(&p), "--samples", "3", "--seed", "0x5EED",
                    "--threads", threads, "--out", s(out),
                ]);
                assert!(matches!(o.status.code(), Some(0 | 2)));
            }
            outputs.push((std::fs::read(&json).unwrap(), std::fs::read(&csv).unwrap()));
        }
        ok &= outputs.windows(2).all(|w| w[0] == w[1]);
    }
    let line = format!(
        "criterion 9 (cli): {} byte-identical classify output across 1, 3 and 8 threads\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok);
}
