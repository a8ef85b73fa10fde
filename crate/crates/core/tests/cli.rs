use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_innovation-peaks"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn synth(dir: &Path) {
    let out = run(
        &[
            "synth",
            "--out",
            "corpus.jsonl",
            "--authors",
            "120",
            "--seed",
            "4",
        ],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn full_run_writes_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for out in ["a", "b"] {
        let o = run(
            &["run", "--input", "corpus.jsonl", "--out", out],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "report.json"));
    assert!(names.iter().any(|n| n == "manifest_ingest.json"));
    for n in names {
        let a = std::fs::read(dir.path().join("a").join(&n)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&n)).unwrap();
        assert_eq!(a, b, "{n:?}");
    }
}

#[test]
fn missing_upstream_artifact_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["regress", "--out", "empty"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("careers"));
}

#[test]
fn invalid_parameters_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let cases: &[&[&str]] = &[
        &["ingest", "--input", "corpus.jsonl", "--min-window=-1"],
        &["score", "--variant", "sideways"],
        &["null", "--replicates", "0"],
        &["careers", "--start-min", "2001", "--start-max", "1990"],
        &["ingest", "--input", "no-such-file.jsonl"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = run(args, dir.path());
        assert_eq!(o.status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn stage_by_stage_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for stage in [
        "ingest", "score", "careers", "null", "phases", "regress", "report",
    ] {
        let o = run(
            &[stage, "--input", "corpus.jsonl", "--out", "staged"],
            dir.path(),
        );
        assert!(
            o.status.success(),
            "{stage}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = run(
        &["run", "--input", "corpus.jsonl", "--out", "whole"],
        dir.path(),
    );
    assert!(o.status.success());
    for f in ["report.json", "manifest_report.json", "scores.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("staged").join(f)).unwrap(),
            std::fs::read(dir.path().join("whole").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn help_exits_0() {
    assert!(bin().arg("--help").output().unwrap().status.success());
}
