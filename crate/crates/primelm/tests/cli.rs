//! Integration tests for the command-line driver: exit codes, the
//! machine-parsable error line, and byte-deterministic artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn primelm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_primelm"))
        .args(args)
        .output()
        .expect("failed to launch binary")
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = primelm(&["--frobnicate", "all"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = primelm(&["do-science"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_3_with_one_error_line() {
    let out = primelm(&["--config", "/nonexistent/config.txt", "gen-stimuli"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count(), 1, "stderr: {stderr}");
    assert!(stderr.starts_with("error: missing-file:"), "stderr: {stderr}");
}

#[test]
fn missing_corpus_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = primelm(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--corpus",
        "/nonexistent/corpus.txt",
        "train-ngram",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_contradiction_exits_4() {
    let out = primelm(&["--models", "1", "gen-stimuli"]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: config:"), "stderr: {stderr}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "family=markov\n").unwrap();
    let out = primelm(&["--config", cfg.to_str().unwrap(), "gen-stimuli"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn gen_stimuli_twice_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = primelm(&[
            "--seed",
            "7",
            "--out",
            dir.path().to_str().unwrap(),
            "gen-stimuli",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let files_a = read_dir_bytes(&a.path().join("stimuli"));
    let files_b = read_dir_bytes(&b.path().join("stimuli"));
    assert_eq!(files_a.len(), 5);
    assert_eq!(files_a, files_b);
}

#[test]
fn all_chain_produces_declared_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "models=3\ncorpus_tokens=30000\nn_adapt=4\nn_test=6\nseed=5\n",
    )
    .unwrap();
    let out = primelm(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "all",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for artifact in [
        "results.tsv",
        "analysis.tsv",
        "figures/same_vs_diff.svg",
        "figures/rc_vs_coord.svg",
        "figures/voice_reduction.svg",
        "manifest.txt",
        "config.txt",
    ] {
        assert!(dir.path().join(artifact).exists(), "missing {artifact}");
    }
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.starts_with("primelm-manifest 1"));
    assert!(manifest.contains("results_checksum="));
    let svg = std::fs::read_to_string(dir.path().join("figures/same_vs_diff.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn staged_subcommands_chain_like_all() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "models=2\ncorpus_tokens=20000\nn_adapt=3\nn_test=4\nseed=9\n",
    )
    .unwrap();
    let base = ["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    for sub in ["gen-stimuli", "train-ngram", "run-priming", "analyze", "plot"] {
        let mut args = base.to_vec();
        args.push(sub);
        let out = primelm(&args);
        assert!(
            out.status.success(),
            "{sub}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert!(dir.path().join("figures/voice_reduction.svg").exists());
}

#[test]
fn run_priming_without_models_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = primelm(&["--out", dir.path().to_str().unwrap(), "run-priming"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count(), 1);
}
