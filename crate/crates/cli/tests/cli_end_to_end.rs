//! End-to-end checks through the real `cogvid` binary: verbs, exit codes,
//! file outputs, and byte-level determinism of the raw CSV.

use std::path::Path;
use std::process::{Command, Output};

fn cogvid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogvid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_tiny_single(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("single.toml");
    std::fs::write(
        &path,
        r#"
experiment = "tiny"

[[channels]]
states = 3

[run]
horizon = 30
seeds = 3
"#,
    )
    .unwrap();
    path
}

fn write_tiny_double(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("double.toml");
    std::fs::write(
        &path,
        r#"
experiment = "tiny2"

[[channels]]
states = 3
p_stay = 0.7
p_to_busy = 0.2

[[channels]]
states = 3
p_stay = 0.3
p_to_busy = 0.6
p_busy_stay = 0.8

[run]
horizon = 30
seeds = 3
"#,
    )
    .unwrap();
    path
}

#[test]
fn preset_list_prints_the_catalog() {
    let out = cogvid(&["preset-list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig3", "fig7", "fig12"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn missing_config_file_exits_1() {
    let out = cogvid(&["run", "--config", "/nonexistent/nope.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("/nonexistent/nope.toml"), "{err}");
}

#[test]
fn invalid_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[sensor]\nsigma = -0.5\n").unwrap();
    let out = cogvid(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("sigma"));
}

#[test]
fn pomdp_without_policy_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_double(dir.path());
    let out = cogvid(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_grid_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("huge.toml");
    std::fs::write(
        &path,
        "[[channels]]\n[[channels]]\n[solver]\nresolution = 40\nmax_joint_points = 100\n",
    )
    .unwrap();
    let out = cogvid(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn solve_run_pipeline_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_double(dir.path());
    let policy = dir.path().join("policy.bin");
    let out = cogvid(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        policy.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(policy.exists());

    let run = |out_dir: &Path| {
        let out = cogvid(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--policy",
            policy.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    run(&out1);
    run(&out2);

    let raw1 = std::fs::read(out1.join("tiny2_raw.csv")).unwrap();
    let raw2 = std::fs::read(out2.join("tiny2_raw.csv")).unwrap();
    assert_eq!(raw1, raw2, "raw CSV must be byte-identical");

    let text = String::from_utf8(raw1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        cogvid_cli::csvout::RAW_HEADER,
        "header is pinned"
    );
    // 1 sweep point x 3 methods x 3 seeds
    assert_eq!(lines.count(), 9);

    for f in [
        "tiny2_agg.csv",
        "tiny2_avg_distortion.svg",
        "tiny2_spectrum_utilization.svg",
        "tiny2_collision_rate.svg",
    ] {
        assert!(out1.join(f).exists(), "missing {f}");
    }
}

#[test]
fn sweep_verb_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_single(dir.path());
    let out_dir = dir.path().join("out");
    let out = cogvid(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "sigma",
        "--values",
        "0.05,0.2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(out_dir.join("tiny_raw.csv")).unwrap();
    // 2 sweep points x 4 methods x 3 seeds, plus the header
    assert_eq!(text.lines().count(), 1 + 2 * 4 * 3);
    assert!(text.contains("sigma"));

    let bad = cogvid(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "sigma",
        "--values",
        "0.05,-1.0",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn seeds_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_single(dir.path());
    let out_dir = dir.path().join("out");
    let out = cogvid(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(out_dir.join("tiny_raw.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 2);
}
