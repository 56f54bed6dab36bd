//! End-to-end checks of the binary: exit codes, config handling, and
//! byte-identical reruns.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_capilab"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("capilab-cli-test").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn exit_codes_separate_usage_errors_from_assertion_results() {
    let out = bin().args(["solve", "--r", "1", "--theta", "9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contact angle"));

    let out = bin().args(["solve", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let dir = tmp("check-cap");
    let out = bin()
        .args([
            "check", "--r", "1", "--theta", "1.0472", "--mode", "planar",
            "--n-radial", "16", "--n-angular", "32", "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("suite passed"));
    assert!(dir.join("report.json").is_file());
    assert!(dir.join("report.csv").is_file());
    assert!(dir.join("suite.json").is_file());
}

#[test]
fn config_files_merge_under_flags_and_reject_typos() {
    let dir = tmp("config-merge");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        "version = 1\nmode = \"planar\"\ntheta = 90.0\ndeg = true\nn_radial = 16\nn_angular = 32\n",
    )
    .unwrap();
    let out_a = dir.join("a");
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_a)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mesh = std::fs::read_to_string(out_a.join("mesh.txt")).unwrap();
    assert!(mesh.starts_with("capilab-mesh 1 planar"));

    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "version = 1\nthetaa = 1.0\n").unwrap();
    let out = bin().args(["solve", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_configs_produce_identical_bytes() {
    let run = |dir: &PathBuf| {
        let out = bin()
            .args([
                "sweep-serrin", "--theta", "1.5708", "--k", "2", "--amps", "0.05,0.1",
                "--n-radial", "16", "--n-angular", "32", "--out",
            ])
            .arg(dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let (a, b) = (tmp("rerun-a"), tmp("rerun-b"));
    run(&a);
    run(&b);
    for name in ["sweep-serrin.csv", "sweep-serrin.json", "sweep-serrin.svg"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between reruns");
    }
}
