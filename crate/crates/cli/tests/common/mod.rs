#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo")
}

/// `conexp` with the demo inputs and `out` as output dir; no CONEXP_* leaks in.
pub fn conexp(out: &Path) -> Command {
    let d = demo_dir();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_conexp"));
    for (k, _) in std::env::vars() {
        if k.starts_with("CONEXP_") {
            cmd.env_remove(k);
        }
    }
    cmd.env("RUST_LOG", "warn")
        .arg("--corpus")
        .arg(d.join("corpus.json"))
        .arg("--kb")
        .arg(d.join("kb.tsv"))
        .arg("--embeddings")
        .arg(d.join("embeddings.txt"))
        .arg("--labels")
        .arg(d.join("labels.tsv"))
        .arg("--output")
        .arg(out);
    cmd
}

pub fn run(out: &Path, args: &[&str]) -> Output {
    conexp(out).args(args).output().expect("spawn conexp")
}

pub fn ok(out: &Path, args: &[&str]) -> String {
    let o = run(out, args);
    assert!(
        o.status.success(),
        "conexp {args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

/// expand, classify, rerank, evaluate; returns the evaluate stdout.
pub fn chain(out: &Path) -> String {
    ok(out, &["expand"]);
    ok(out, &["classify"]);
    ok(out, &["rerank"]);
    ok(out, &["evaluate"])
}

pub fn read_lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn ranking_ids(out: &Path, file: &str) -> Vec<String> {
    read_lines(&out.join(file))
        .iter()
        .map(|v| v["concept"].as_str().unwrap().to_string())
        .collect()
}

/// Writes a deletion log with `counts[i]` deletions of `concepts[i]`.
pub fn write_events(path: &Path, concepts: &[String], counts: &[usize]) {
    let mut text = String::new();
    let mut ts = 0;
    for (c, &n) in concepts.iter().zip(counts) {
        for s in 0..n {
            ts += 1;
            text.push_str(
                &serde_json::json!({
                    "ts": ts, "session": format!("s{s}"), "course": "algorithms",
                    "video": "algorithms-v1", "concept": c, "epoch": 0
                })
                .to_string(),
            );
            text.push('\n');
        }
    }
    std::fs::write(path, text).unwrap();
}
