use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use torusflow::scenario::{AnalysisResult, OutputDocument};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torusflow"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn invalid_eta_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "bad.json",
        r#"{"name": "bad", "measure": {"type": "bernoulli", "eta": 1.5}, "analysis": {"kind": "charfn", "times": [1.0]}}"#,
    );
    let out = run(&["charfn", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("measure.eta"), "{err}");
}

#[test]
fn unknown_field_reports_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "typo.json",
        r#"{"name": "typo", "measure": {"type": "bernoulli", "eta": 0.5}, "analysis": {"kind": "charfn", "timez": [1.0]}}"#,
    );
    let out = run(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("analysis"));
}

#[test]
fn subcommand_must_match_requested_analysis() {
    let p = scenarios().join("uniform-density.json");
    let out = run(&["recur", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wander"));
}

#[test]
fn bernoulli_half_matches_sinc() {
    let p = scenarios().join("bernoulli-half-charfn.json");
    let out = run(&["charfn", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,re,im,abs,convention,truncation_K");
    assert_eq!(rows.len(), 6);
    for row in &rows[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        let t: f64 = cols[0].parse().unwrap();
        let re: f64 = cols[1].parse().unwrap();
        let w = 2.0 * PI * t;
        assert!((re - w.sin() / w).abs() <= 1e-8, "{row}");
        assert_eq!(cols[4], "cyclic");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let all: Vec<String> = fs::read_dir(scenarios())
        .unwrap()
        .map(|e| e.unwrap().path().to_str().unwrap().to_owned())
        .filter(|p| p.ends_with(".json"))
        .collect();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let mut cmd = bin();
        cmd.env("TORUSFLOW_THREADS", threads).arg("run").args(&all).arg("--out").arg(&out_dir);
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        assert_eq!(files.len(), all.len());
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn json_output_round_trips() {
    let p = scenarios().join("jacobi-resonant.json");
    let out = run(&["classify-freqs", p.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: OutputDocument = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.meta.scenario, "jacobi-resonant");
    assert_eq!(doc.meta.scenario_sha256.len(), 64);
    assert!(matches!(doc.result, AnalysisResult::ClassifyFreqs { .. }));
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", String::from_utf8(out.stdout).unwrap());
}

#[test]
fn format_override_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("weyl.json");
    let p = scenarios().join("weyl-resonant-pair.json");
    let out = run(&["weyl", p.to_str().unwrap(), "--format", "json", "--out", dest.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: OutputDocument = serde_json::from_str(&fs::read_to_string(dest).unwrap()).unwrap();
    let AnalysisResult::Weyl { rows, .. } = doc.result else { panic!() };
    assert!(rows.iter().all(|r| r.discrepancy >= 0.2));
}

#[test]
fn classify_values_from_the_command_line() {
    let out = run(&["classify-freqs", "--values", "1,sqrt(2),1+sqrt(2)"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["jacobi"]["class"], "resonant-mixed");
    assert_eq!(v["jacobi"]["witness"]["exact"], true);
}

#[test]
fn missing_analysis_uses_subcommand_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "plain.json",
        r#"{"name": "plain", "measure": {"type": "density", "support": {"lo": 0.0, "hi": 1.0}, "shape": {"kind": "uniform"}, "mass": 1.0}}"#,
    );
    let out = run(&["wander", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: OutputDocument = serde_json::from_slice(&out.stdout).unwrap();
    let AnalysisResult::Wander { certificate: Some(c) } = doc.result else { panic!() };
    assert_eq!((c.delta, c.t), (1.0, 4.0));
}
