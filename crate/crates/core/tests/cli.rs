use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use trajcurate::io::read_manifest;

const BIN: &str = env!("CARGO_BIN_EXE_trajcurate");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn record(id: &str, dy: f64, v: f64, labeled: bool) -> String {
    let pts: Vec<String> = (0..12).map(|k| format!("[{},{dy}]", k as f64 * v * 0.5)).collect();
    format!(
        "{{\"id\":\"{id}\",\"points\":[{}],\"v\":{v},\"a\":0,\"h\":0,\"labeled\":{labeled}}}\n",
        pts.join(",")
    )
}

fn three_records(dir: &Path) -> String {
    let path = dir.join("pool.jsonl");
    let text = record("a", 0.0, 2.0, false) + &record("b", 0.05, 2.0, true) + &record("c", 40.0, 8.0, false);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn bigger_pool(dir: &Path) -> String {
    let path = dir.join("pool.csv");
    let s = path.to_str().unwrap().to_string();
    assert_eq!(code(&["generate", "--count", "300", "--seed", "9", "--out", &s]), 0);
    s
}

#[test]
fn cluster_writes_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let input = three_records(dir.path());
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    assert_eq!(code(&["cluster", "--input", &input, "--tau", "10", "--out", out_s]), 0);
    let a = fs::read_to_string(out.join("assignments.csv")).unwrap();
    assert_eq!(a, "id,cluster,novelty_class\na,0,familiar\nb,0,familiar\nc,1,singleton\n");
    let d = fs::read_to_string(out.join("dendrogram.txt")).unwrap();
    assert_eq!(d.lines().count(), 2);
}

#[test]
fn labeled_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = three_records(dir.path());
    let ids = dir.path().join("labeled.txt");
    fs::write(&ids, "# reviewed\nc\n").unwrap();
    let out = dir.path().join("out");
    let args = ["cluster", "--input", &input, "--labeled", ids.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(code(&args), 0);
    let a = fs::read_to_string(out.join("assignments.csv")).unwrap();
    assert_eq!(a, "id,cluster,novelty_class\na,0,novel\nb,0,novel\nc,1,labeled-singleton\n");

    fs::write(&ids, "zzz\n").unwrap();
    assert_eq!(code(&args), 1);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["bogus"]), 2);
    let bad_alpha = run(&["sample", "--input", "x.jsonl", "--alpha", "1.5", "--beta", "0.2", "--budget", "5", "--out", "m.json"]);
    assert_eq!(bad_alpha.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_alpha.stderr).contains("--alpha"));
    assert_eq!(code(&["sample", "--input", "x.jsonl", "--alpha", "0.5", "--beta", "0", "--budget", "5", "--out", "m"]), 2);
    assert_eq!(code(&["cluster", "--input", "x.jsonl", "--weights", "1,2"]), 2);
    assert_eq!(code(&["cluster", "--input", "x.jsonl", "--tau", "-1"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,x1\nq,1\n").unwrap();
    let out = run(&["cluster", "--input", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert_eq!(code(&["stats", "--input", "/nonexistent/pool.jsonl"]), 1);
}

#[test]
fn sample_manifest_records_the_input_digest() {
    let dir = tempfile::tempdir().unwrap();
    let input = bigger_pool(dir.path());
    let m = dir.path().join("m.json");
    let args = [
        "sample", "--input", &input, "--alpha", "0.4", "--beta", "0.2", "--budget", "0.1", "--seed", "5", "--out",
        m.to_str().unwrap(),
    ];
    assert_eq!(code(&args), 0);
    let doc = read_manifest(&m).unwrap();
    let digest = hex::encode(Sha256::digest(fs::read(&input).unwrap()));
    assert_eq!(doc.input_digest, digest);
    assert_eq!(doc.manifest.selected.len(), 30);
    assert_eq!(doc.manifest.config.seed, 5);
    assert_eq!((doc.manifest.novel_quota, doc.manifest.familiar_quota), (12, 18));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = bigger_pool(dir.path());
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let runs: Vec<(Vec<String>, Vec<String>)> = vec![
        (
            vec!["cluster".into(), "--input".into(), input.clone(), "--out".into(), p("c1"), "--dump-matrix".into(), p("c1.bin")],
            vec![p("c1/assignments.csv"), p("c1/dendrogram.txt"), p("c1.bin")],
        ),
        (
            vec!["sample".into(), "--input".into(), input.clone(), "--alpha".into(), "0.6".into(), "--beta".into(),
                 "0.4".into(), "--budget".into(), "25".into(), "--seed".into(), "3".into(), "--out".into(), p("m.json")],
            vec![p("m.json")],
        ),
        (
            vec!["stats".into(), "--input".into(), input.clone(), "--out".into(), p("stats.txt")],
            vec![p("stats.txt")],
        ),
        (
            vec!["simulate".into(), "--grid".into(), "0,1/0.2/0.1,0.3".into(), "--seeds".into(), "2".into(), "--out".into(), p("sim.csv")],
            vec![p("sim.csv")],
        ),
        (
            vec!["generate".into(), "--count".into(), "50".into(), "--out".into(), p("gen.jsonl")],
            vec![p("gen.jsonl")],
        ),
    ];
    for (args, outputs) in runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(code(&args), 0, "{args:?}");
        let first: Vec<Vec<u8>> = outputs.iter().map(|o| fs::read(o).unwrap()).collect();
        assert_eq!(code(&args), 0, "{args:?}");
        let second: Vec<Vec<u8>> = outputs.iter().map(|o| fs::read(o).unwrap()).collect();
        assert_eq!(first, second, "{args:?}");
    }
}
