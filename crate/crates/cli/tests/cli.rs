mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::process::Stdio;
use std::time::{Duration, Instant};

use common::*;

#[test]
fn full_chain_prints_map_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let stdout = chain(out);
    let methods: Vec<&str> = stdout.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(methods, ["MOOC", "MOOC-C", "EBM", "PR"]);
    for line in stdout.lines() {
        let v: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
    let csv = std::fs::read_to_string(out.join("evaluation.csv")).unwrap();
    assert!(csv.starts_with("method,map\n"));
    assert_eq!(csv.lines().count(), 5);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for stage in ["expand", "classify", "rerank", "evaluate"] {
        let s = &manifest["stages"][stage];
        assert_eq!(s["config_hash"].as_str().unwrap().len(), 64, "{stage}");
        assert!(s["inputs"]["kb"].is_string(), "{stage}");
        assert!(s["config"]["pipeline"]["alpha"].is_number());
    }
    assert!(manifest["stages"]["rerank"]["inputs"]["predictions.jsonl"].is_string());
    assert!(manifest["stages"]["expand"]["outputs"]["candidates.jsonl"].is_string());
    assert!(!out.join(".conexp.lock").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    chain(a.path());
    chain(b.path());
    for f in [
        "candidates.jsonl",
        "encoder.json",
        "features.csv",
        "classifier.json",
        "predictions.jsonl",
        "ranking.jsonl",
        "evaluation.csv",
    ] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn missing_kb_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = conexp(dir.path()).args(["expand", "--kb", "/does/not/exist.tsv"]).output().unwrap();
    // `--kb` given twice is a usage error; use the env variable instead.
    assert_eq!(o.status.code(), Some(2));
    let d = demo_dir();
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_conexp"))
        .args(["expand", "--corpus"])
        .arg(d.join("corpus.json"))
        .arg("--embeddings")
        .arg(d.join("embeddings.txt"))
        .arg("--kb")
        .arg("/does/not/exist.tsv")
        .arg("-o")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kb file /does/not/exist.tsv does not exist"));
}

#[test]
fn missing_stage_input_exits_3_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["rerank"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("candidates.jsonl"));
    ok(dir.path(), &["expand"]);
    let o = run(dir.path(), &["rerank"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("predictions.jsonl") && err.contains("conexp classify"), "{err}");
    let o = run(dir.path(), &["optimize", "--events", "/nope"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn max_waves_one_keeps_first_wave_only() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["expand", "--max-waves", "1"]);
    let rows = read_lines(&dir.path().join("candidates.jsonl"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["wave"] == 1));
}

#[test]
fn correction_rate_from_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    chain(out);
    let ids = ranking_ids(out, "ranking.jsonl");
    let events = out.join("events.jsonl");
    write_events(&events, &ids[..3], &[5, 3, 2]);
    let ev = events.to_str().unwrap();
    let stdout = ok(out, &["evaluate", "--metric", "cr", "--n", "1", "--events", ev]);
    assert_eq!(stdout.trim(), "C_r@1\t0.5000");
    let n = ids.len().to_string();
    let stdout = ok(out, &["evaluate", "--metric", "cr", "--n", &n, "--events", ev]);
    assert_eq!(stdout.trim(), format!("C_r@{n}\t1.0000"));
    let o = run(out, &["evaluate", "--metric", "cr", "--events", ev]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_demotes_the_deleted_concept() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    chain(out);
    let before = ranking_ids(out, "ranking.jsonl");
    let events = out.join("events.jsonl");
    write_events(&events, &before[..1], &[4]);
    let stdout = ok(out, &["optimize", "--events", events.to_str().unwrap()]);
    assert!(stdout.contains("MAP before") && stdout.contains("MAP after"));
    let after = ranking_ids(out, "ranking.optimized.jsonl");
    let pos = after.iter().position(|c| *c == before[0]);
    assert!(pos.is_none_or(|p| p > 0), "deleted concept still on top");
    let changes: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("rank_changes.json")).unwrap()).unwrap();
    assert!(!changes.as_array().unwrap().is_empty());

    std::fs::write(&events, "").unwrap();
    let o = run(out, &["optimize", "--events", events.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweeps_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let eval = chain(out);
    let mooc: f64 = eval.lines().next().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    ok(out, &["sweep", "--param", "alpha"]);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "param,value,map");
    assert_eq!(rows.len(), 12);
    // Keeping the whole list in place reproduces the generation order.
    let last: f64 = rows[11].split(',').nth(2).unwrap().parse().unwrap();
    assert!((last - mooc).abs() < 5e-5);

    let start = Instant::now();
    ok(out, &["sweep", "--param", "tau", "--grid", "1,2,3,4,5,6,7,8,9,10"]);
    assert!(start.elapsed() < Duration::from_secs(60));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("tau,")));
    // The default tau has labeled test concepts, so its MAP is defined.
    assert!(csv.lines().any(|l| l.starts_with("tau,8,") && !l.ends_with("NaN")));
}

#[test]
fn config_file_env_and_flags_layer_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let d = demo_dir();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[paths]\ncorpus = {:?}\nkb = {:?}\nembeddings = {:?}\noutput = \"out\"\n\n[pipeline]\nalpha = 0.3\n\n[pipeline.generation.cluster]\ntau = 3\n",
            d.join("corpus.json"),
            d.join("kb.tsv"),
            d.join("embeddings.txt")
        ),
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_conexp");
    let tau_of = |out: &std::path::Path| -> (u64, f64) {
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        let p = &m["stages"]["expand"]["config"]["pipeline"];
        (p["generation"]["cluster"]["tau"].as_u64().unwrap(), p["alpha"].as_f64().unwrap())
    };
    let base = || {
        let mut c = std::process::Command::new(bin);
        c.env_remove("CONEXP_TAU").env("RUST_LOG", "warn").arg("--config").arg(&cfg);
        c
    };
    // The output path is relative to the config file.
    assert!(base().arg("expand").status().unwrap().success());
    let out = dir.path().join("out");
    assert_eq!(tau_of(&out), (3, 0.3));
    assert!(base().env("CONEXP_TAU", "5").arg("expand").status().unwrap().success());
    assert_eq!(tau_of(&out).0, 5);
    assert!(base().env("CONEXP_TAU", "5").args(["expand", "--tau", "6"]).status().unwrap().success());
    assert_eq!(tau_of(&out).0, 6);

    let text = std::fs::read_to_string(&cfg).unwrap();
    std::fs::write(&cfg, text.replace("tau = 3", "tau = 3\nbogus = 1")).unwrap();
    let o = base().arg("expand").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field `bogus`"));
}

#[test]
fn locked_output_dir_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".conexp.lock"), "1\n").unwrap();
    let o = run(dir.path(), &["expand"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("in use"));
    assert!(!dir.path().join("candidates.jsonl").exists());
}

#[test]
fn serve_on_port_zero_prints_the_port() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = conexp(dir.path())
        .args(["serve", "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").expect(&line).to_string();
    let port: u16 = addr.rsplit(':').next().unwrap().parse().unwrap();
    assert_ne!(port, 0);

    let mut stream = std::net::TcpStream::connect(&addr).unwrap();
    stream
        .write_all(format!("GET /api/courses HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").as_bytes())
        .unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"algorithms\""));
}
