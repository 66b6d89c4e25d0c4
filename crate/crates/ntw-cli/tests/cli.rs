//! End-to-end checks of the `ntw` binary: exit codes, error text, and the
//! recompute subcommands round-tripping a finished run.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ntw(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ntw"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn ntw")
}

fn write_bump_dataset(path: &Path, n: usize, t: usize) {
    let mut text = String::new();
    for i in 0..n {
        let shift = (i as f64) * 3.0 - 4.5;
        text.push('1');
        for z in 0..t {
            let d = z as f64 - (t as f64 / 2.0 + shift);
            text.push_str(&format!(",{:.6}", (-d * d / 50.0).exp()));
        }
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

#[test]
fn dtw_prints_discrepancy() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "1\n").unwrap();
    fs::write(dir.path().join("b.txt"), "3\n").unwrap();
    let out = ntw(&["dtw", "a.txt", "b.txt"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4");
}

#[test]
fn dtw_path_dump_starts_and_ends_at_corners() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "0, 1, 2\n").unwrap();
    fs::write(dir.path().join("b.txt"), "0 2\n").unwrap();
    let out = ntw(&["dtw", "a.txt", "b.txt", "--path", "p.csv"], dir.path());
    assert!(out.status.success());
    let path = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = path.lines().collect();
    assert_eq!(lines[0], "i,j");
    assert_eq!(lines[1], "0,0");
    assert_eq!(*lines.last().unwrap(), "2,1");
}

#[test]
fn missing_input_exits_2_and_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = ntw(&["align", "--input", "nosuch.csv", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuch.csv"));
}

#[test]
fn zero_updates_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_bump_dataset(&dir.path().join("d.csv"), 3, 16);
    let out = ntw(
        &["align", "--input", "d.csv", "--updates", "0", "--out", "r"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("updates must be >= 1"));
}

#[test]
fn unknown_format_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_bump_dataset(&dir.path().join("d.csv"), 3, 16);
    let out = ntw(
        &["align", "--input", "d.csv", "--format", "pipe", "--out", "r"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pipe"));
}

#[test]
fn align_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_bump_dataset(&dir.path().join("d.csv"), 4, 32);
    let out = ntw(
        &[
            "align", "--input", "d.csv", "--updates", "20", "--hidden1", "8", "--hidden2", "8",
            "--out", "run",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "warpings.csv",
        "aligned.csv",
        "average.csv",
        "loss_history.csv",
        "metrics.json",
        "plot.svg",
    ] {
        assert!(dir.path().join("run").join(name).exists(), "missing {name}");
    }
}

#[test]
fn metrics_and_average_reproduce_align_outputs_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    write_bump_dataset(&dir.path().join("d.csv"), 4, 32);
    let args = [
        "align", "--input", "d.csv", "--updates", "20", "--hidden1", "8", "--hidden2", "8",
        "--out", "run",
    ];
    assert!(ntw(&args, dir.path()).status.success());
    let run = dir.path().join("run");
    let metrics_before = fs::read(run.join("metrics.json")).unwrap();
    let average_before = fs::read(run.join("average.csv")).unwrap();

    let out = ntw(&["metrics", "--input", "d.csv", "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(run.join("metrics.json")).unwrap(), metrics_before);

    let out = ntw(&["average", "--input", "d.csv", "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(run.join("average.csv")).unwrap(), average_before);
}

#[test]
fn metrics_rejects_mismatched_selection() {
    let dir = tempfile::tempdir().unwrap();
    write_bump_dataset(&dir.path().join("d.csv"), 4, 32);
    let args = [
        "align", "--input", "d.csv", "--updates", "5", "--hidden1", "8", "--hidden2", "8",
        "--out", "run",
    ];
    assert!(ntw(&args, dir.path()).status.success());
    // shrink the selection so the saved warpings no longer match
    let out = ntw(
        &["metrics", "--input", "d.csv", "--max-series", "2", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('4') && err.contains('2'), "{err}");
}

#[test]
fn metrics_without_prior_run_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_bump_dataset(&dir.path().join("d.csv"), 3, 16);
    let out = ntw(&["metrics", "--input", "d.csv", "--out", "empty"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    write_bump_dataset(&dir.path().join("d.csv"), 3, 16);
    fs::write(
        dir.path().join("cfg.toml"),
        "updates = 3\nhidden1 = 8\nhidden2 = 8\n",
    )
    .unwrap();
    let args = [
        "align", "--input", "d.csv", "--config", "cfg.toml", "--updates", "5", "--out", "run",
    ];
    assert!(ntw(&args, dir.path()).status.success());
    let history = fs::read_to_string(dir.path().join("run/loss_history.csv")).unwrap();
    // header plus one row per update; the flag's 5 wins over the file's 3
    assert_eq!(history.lines().count(), 6);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_bump_dataset(&dir.path().join("d.csv"), 3, 16);
    fs::write(dir.path().join("cfg.toml"), "learning-rate = 0.1\n").unwrap();
    let out = ntw(
        &["align", "--input", "d.csv", "--config", "cfg.toml", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning-rate"));
}
