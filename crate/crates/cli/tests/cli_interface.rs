//! Exit codes, determinism, and manifest round-trips of the binary.

use std::path::Path;
use std::process::Command;

fn stq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stq"))
}

fn read_tables(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let bytes = std::fs::read(dir.join(&n)).unwrap();
            (n, bytes)
        })
        .collect()
}

#[test]
fn unknown_experiment_exits_1_without_artifacts() {
    let tmp = std::env::temp_dir().join("stq_unknown_exp");
    let _ = std::fs::remove_dir_all(&tmp);
    let status = stq()
        .args(["run", "fig9z", "--out"])
        .arg(&tmp)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    assert!(!tmp.exists(), "no artifacts on unknown id");
}

#[test]
fn malformed_config_exits_2() {
    let tmp = std::env::temp_dir().join("stq_bad_config");
    let _ = std::fs::remove_dir_all(&tmp);
    std::fs::create_dir_all(&tmp).unwrap();
    let cfg = tmp.join("bad.cfg");
    std::fs::write(&cfg, "probe.n_shots = banana\n").unwrap();
    let status = stq()
        .args(["run", "s3-snr", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(tmp.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Unknown keys are also config errors.
    std::fs::write(&cfg, "probe.n_shotz = 70\n").unwrap();
    let status = stq()
        .args(["run", "s3-snr", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(tmp.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    // A file's child path can never be a directory.
    let tmp = std::env::temp_dir().join("stq_unwritable");
    let _ = std::fs::remove_dir_all(&tmp);
    std::fs::create_dir_all(&tmp).unwrap();
    let blocker = tmp.join("blocker");
    std::fs::write(&blocker, b"x").unwrap();
    let status = stq()
        .args(["run", "s3-snr", "--out"])
        .arg(blocker.join("sub"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn identical_seed_reproduces_identical_tables() {
    let base = std::env::temp_dir().join("stq_determinism");
    let _ = std::fs::remove_dir_all(&base);
    for sub in ["a", "b"] {
        let status = stq()
            .args(["run", "fig2c", "--seed", "777", "--out"])
            .arg(base.join(sub))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = read_tables(&base.join("a/fig2c"));
    let b = read_tables(&base.join("b/fig2c"));
    assert!(!a.is_empty());
    assert_eq!(a, b, "tables differ between identical runs");

    // Different seed produces different data.
    let status = stq()
        .args(["run", "fig2c", "--seed", "778", "--out"])
        .arg(base.join("c"))
        .status()
        .unwrap();
    assert!(status.success());
    let c = read_tables(&base.join("c/fig2c"));
    assert_ne!(a, c, "seed change must change the data");
}

#[test]
fn manifest_round_trip_reproduces_the_run() {
    let base = std::env::temp_dir().join("stq_manifest");
    let _ = std::fs::remove_dir_all(&base);
    let status = stq()
        .args([
            "run",
            "s3-snr",
            "--seed",
            "31415",
            "--set",
            "s3.traces_per_point=200",
            "--out",
        ])
        .arg(base.join("first"))
        .status()
        .unwrap();
    assert!(status.success());

    let manifest = base.join("first/s3-snr/manifest.txt");
    assert!(manifest.exists());
    let status = stq()
        .args(["run", "s3-snr", "--config"])
        .arg(&manifest)
        .args(["--out"])
        .arg(base.join("second"))
        .status()
        .unwrap();
    assert!(status.success());

    let a = read_tables(&base.join("first/s3-snr"));
    let b = read_tables(&base.join("second/s3-snr"));
    assert_eq!(a, b, "manifest re-run must reproduce the tables");

    let m1 = std::fs::read_to_string(&manifest).unwrap();
    let m2 = std::fs::read_to_string(base.join("second/s3-snr/manifest.txt")).unwrap();
    assert_eq!(m1, m2, "manifests must round-trip");
}

#[test]
fn summary_lists_pass_lines() {
    let base = std::env::temp_dir().join("stq_summary");
    let _ = std::fs::remove_dir_all(&base);
    let status = stq()
        .args(["run", "bench-latency", "--seed", "5", "--out"])
        .arg(&base)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(base.join("bench-latency/summary.txt")).unwrap();
    assert!(text.contains("result = PASS"), "summary:\n{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS ")));
    assert!(base.join("bench-latency/plot.gp").exists());
}
