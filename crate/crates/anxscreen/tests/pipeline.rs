//! End-to-end runs of the `anxscreen` binary: the full demo pipeline, rerun
//! determinism, exit codes, and the config-file override path.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anxscreen"))
}

fn run_ok(args: &[&str], cwd: &Path) -> Output {
    let out = bin()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn anxscreen");
    assert!(
        out.status.success(),
        "command {:?} failed with {:?}:\n{}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn demo_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    run_ok(
        &["demo", "--posts", "900", "--seed", "42", "--out", "demo.jsonl"],
        root,
    );
    run_ok(
        &[
            "ingest", "--corpus", "demo.jsonl", "--format", "jsonl", "--min-tokens", "10",
            "--out", "run",
        ],
        root,
    );
    run_ok(
        &["split", "--corpus", "run/corpus.jsonl", "--seed", "42", "--out", "run"],
        root,
    );
    run_ok(
        &[
            "featurize", "--corpus", "run/corpus.jsonl", "--split", "run/split.csv", "--threads",
            "2", "--out", "run",
        ],
        root,
    );
    run_ok(
        &[
            "train", "--features", "run/features.csv", "--calibrate", "--seed", "42", "--out",
            "run",
        ],
        root,
    );
    run_ok(
        &[
            "evaluate", "--features", "run/features.csv", "--model", "run/model.json",
            "--partition", "test", "--bootstrap", "200", "--seed", "42", "--out", "run",
        ],
        root,
    );
    run_ok(
        &["ablate", "--features", "run/features.csv", "--seed", "42", "--out", "run"],
        root,
    );
    run_ok(
        &[
            "mask", "--corpus", "run/corpus.jsonl", "--split", "run/split.csv",
            "--mask-keywords", "default", "--seed", "42", "--out", "run",
        ],
        root,
    );
    run_ok(
        &[
            "early", "--features", "run/features.csv", "--corpus", "run/corpus.jsonl", "--k",
            "2,3", "--seed", "42", "--out", "run",
        ],
        root,
    );
    run_ok(
        &[
            "crossdomain", "--features-a", "run/features.csv", "--features-b",
            "run/features.csv", "--seed", "42", "--out", "run",
        ],
        root,
    );
    run_ok(&["report", "--results", "run", "--out", "run/report"], root);
    for artifact in [
        "run/corpus.jsonl",
        "run/ingest_report.json",
        "run/split.csv",
        "run/balance_report.json",
        "run/features.csv",
        "run/standardizer.json",
        "run/model.json",
        "run/eval_report.json",
        "run/roc.csv",
        "run/ablation.json",
        "run/ablation_summary.csv",
        "run/masking.json",
        "run/masking_summary.csv",
        "run/early.json",
        "run/early_summary.csv",
        "run/crossdomain.json",
        "run/crossdomain.csv",
        "run/report/consolidated.json",
        "run/report/coefficients.csv",
        "run/report/roc.csv",
        "run/report/early_curve.csv",
    ] {
        assert!(root.join(artifact).is_file(), "missing {artifact}");
    }
    // the coefficient table is sorted by |coefficient| descending
    let coef = std::fs::read_to_string(root.join("run/report/coefficients.csv")).unwrap();
    let magnitudes: Vec<f64> = coef
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap().abs())
        .collect();
    assert_eq!(magnitudes.len(), 13);
    for w in magnitudes.windows(2) {
        assert!(w[0] >= w[1], "coefficients not sorted: {magnitudes:?}");
    }
    // the cross-domain table mirrors the five-column layout
    let cd = std::fs::read_to_string(root.join("run/crossdomain.csv")).unwrap();
    assert_eq!(
        cd.lines().next().unwrap(),
        "feature,direction_a,direction_b,consistent,hedges_g"
    );
    assert_eq!(cd.lines().count(), 13); // header + 12 features
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    run_ok(
        &["demo", "--posts", "400", "--seed", "7", "--out", "demo.jsonl"],
        root,
    );
    run_ok(
        &["ingest", "--corpus", "demo.jsonl", "--out", "run"],
        root,
    );
    run_ok(
        &["split", "--corpus", "run/corpus.jsonl", "--seed", "7", "--out", "run"],
        root,
    );
    run_ok(
        &[
            "featurize", "--corpus", "run/corpus.jsonl", "--split", "run/split.csv", "--out",
            "run",
        ],
        root,
    );
    run_ok(
        &["train", "--features", "run/features.csv", "--seed", "7", "--out", "run"],
        root,
    );
    run_ok(
        &[
            "evaluate", "--features", "run/features.csv", "--model", "run/model.json",
            "--bootstrap", "150", "--seed", "7", "--out", "run",
        ],
        root,
    );
    let first = std::fs::read(root.join("run/eval_report.json")).unwrap();
    let first_model = std::fs::read(root.join("run/model.json")).unwrap();
    run_ok(
        &["train", "--features", "run/features.csv", "--seed", "7", "--out", "run"],
        root,
    );
    run_ok(
        &[
            "evaluate", "--features", "run/features.csv", "--model", "run/model.json",
            "--bootstrap", "150", "--seed", "7", "--out", "run",
        ],
        root,
    );
    assert_eq!(first_model, std::fs::read(root.join("run/model.json")).unwrap());
    assert_eq!(first, std::fs::read(root.join("run/eval_report.json")).unwrap());
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    // usage error -> 1
    let out = bin()
        .args(["definitely-not-a-command"])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // data error (missing file) -> 2
    let out = bin()
        .args(["split", "--corpus", "missing.jsonl", "--out", "run"])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ingest"), "no remediation hint in {stderr}");
    // malformed corpus -> 2 with line number
    std::fs::write(root.join("bad.jsonl"), "{\"id\":\"a\",\"label\":5}\n").unwrap();
    let out = bin()
        .args(["ingest", "--corpus", "bad.jsonl", "--out", "run"])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // success -> 0 and --help -> 0
    let out = bin().args(["--help"]).current_dir(root).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    run_ok(
        &["demo", "--posts", "300", "--seed", "3", "--out", "demo.jsonl"],
        root,
    );
    std::fs::write(
        root.join("run.toml"),
        "corpus = \"demo.jsonl\"\nseed = 3\nout = \"cfg_run\"\nmin_tokens = 10\n",
    )
    .unwrap();
    run_ok(&["ingest", "--config", "run.toml"], root);
    assert!(root.join("cfg_run/corpus.jsonl").is_file());
    // flag overrides the config's out directory
    run_ok(&["ingest", "--config", "run.toml", "--out", "flag_run"], root);
    assert!(root.join("flag_run/corpus.jsonl").is_file());
}
