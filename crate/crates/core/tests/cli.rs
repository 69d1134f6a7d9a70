//! End-to-end checks of the command-line driver.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infomarket"))
}

const SMALL: &str = r#"
name = "small"
runs_per_population = 3
auctions_per_run = 400
base_seed = 9

[[population]]
name = "a"

[[population.agent]]
id = "b1"
role = "buyer"
level = 1

[[population.agent]]
id = "s1"
role = "seller"
level = 0
quality = 8

[[population.agent]]
id = "s2"
role = "seller"
level = 1
quality = 6
"#;

#[test]
fn run_then_recompute_matches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--parallel", "2", "--transcripts", "--checkpoints"])
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["summary.csv", "agents.csv", "distribution.csv", "report.json", "experiment.toml"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert!(out.join("transcripts/a/run0002.csv").is_file());
    assert!(out.join("checkpoints/a/run0002.json").is_file());

    let again = dir.path().join("again");
    let status = bin()
        .args(["metrics", "--config"])
        .arg(&cfg)
        .arg("--dir")
        .arg(&out)
        .arg("--out")
        .arg(&again)
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["summary.csv", "agents.csv", "distribution.csv", "report.json"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn presets_list_and_dump() {
    let out = bin().args(["presets", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), infomarket::harness::PRESET_NAMES.len());

    let out = bin().args(["presets", "dump", "two-level-seller"]).output().unwrap();
    assert!(out.status.success());
    let cfg = infomarket::harness::parse_config(&String::from_utf8(out.stdout).unwrap(), "dump").unwrap();
    assert_eq!(cfg, infomarket::harness::preset("two-level-seller").unwrap());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, SMALL.replace("quality = 6", "quality = 6\ncolour = \"red\"")).unwrap();
    let status = bin().args(["run", "--config"]).arg(&bad).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(1));
    assert_eq!(bin().args(["run", "--preset", "missing"]).status().unwrap().code(), Some(1));
    assert_eq!(bin().args(["bogus"]).status().unwrap().code(), Some(1));
    let missing = dir.path().join("nope.toml");
    assert_eq!(bin().args(["run", "--config"]).arg(&missing).status().unwrap().code(), Some(1));
}

#[test]
fn metrics_without_transcripts_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["metrics", "--preset", "crowding-1level", "--dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
