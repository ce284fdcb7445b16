use std::path::Path;
use std::process::{Command, Output};

fn stprune(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stprune"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

const CONFIG: &str = r#"
seeds = [1, 2]
epochs = 4
batch_size = 32
output_dir = "run"

[data.synth]
nodes = 6
frames = 600
period = 96

[prune]
policy = "st_prune"
prune_ratio = 0.5
"#;

#[test]
fn synth_analyze_train_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("spec.toml"),
        "nodes = 5\nframes = 400\nperiod = 48\n",
    )
    .unwrap();
    let out = stprune(&["synth", "spec.toml", "-o", "s.csv", "--seed", "3"], d);
    assert!(out.status.success(), "{out:?}");
    let out = stprune(&["analyze", "s.csv", "--period", "48", "-o", "an"], d);
    assert!(out.status.success(), "{out:?}");
    assert!(d.join("an/redundancy_report.csv").is_file());

    std::fs::write(d.join("exp.toml"), CONFIG).unwrap();
    let out = stprune(&["train", "exp.toml"], d);
    assert!(out.status.success(), "{out:?}");
    for f in ["report.jsonl", "summary.csv", "epochs.csv"] {
        assert!(d.join("run").join(f).is_file(), "{f}");
    }
    let out = stprune(&["plot-data", "run", "-o", "plots"], d);
    assert!(out.status.success(), "{out:?}");
    let tradeoff = std::fs::read_to_string(d.join("plots/tradeoff.csv")).unwrap();
    assert_eq!(tradeoff.lines().count(), 2);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("exp.toml"), CONFIG.replace("[1, 2]", "[1]")).unwrap();
    let out = stprune(
        &[
            "sweep",
            "exp.toml",
            "--axis",
            "retention",
            "--values",
            "0.3,0.7",
            "-o",
            "sw",
        ],
        d,
    );
    assert!(out.status.success(), "{out:?}");
    let table = std::fs::read_to_string(d.join("sw/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(stprune(&["--help"], d).status.code(), Some(0));
    assert_eq!(stprune(&["frobnicate"], d).status.code(), Some(1));

    let bad = CONFIG.replace("prune_ratio = 0.5", "prune_ratio = 1.0");
    std::fs::write(d.join("bad.toml"), bad).unwrap();
    let out = stprune(&["train", "bad.toml"], d);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(!d.join("run").exists());

    std::fs::write(d.join("typo.toml"), "epochz = 3\n").unwrap();
    assert_eq!(stprune(&["train", "typo.toml"], d).status.code(), Some(1));
    assert_eq!(
        stprune(&["train", "missing.toml"], d).status.code(),
        Some(1)
    );

    let out = stprune(&["plot-data", "nowhere"], d);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let out = stprune(
        &[
            "sweep",
            "bad.toml",
            "--axis",
            "policy",
            "--values",
            "frobnicate",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}
