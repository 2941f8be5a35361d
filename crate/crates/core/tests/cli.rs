use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adaterm::harness::HarnessConfig;

fn adaterm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaterm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
schema_version = 1

[[experiment]]
id = "rb"
kind = "test_function"
function = "rosenbrock"
steps = 300
noise_ratios = [0.0, 0.15]
trials = 3
record_every = 50

[[experiment.optimizer]]
name = "adaterm"
alpha = 0.01

[[experiment.optimizer]]
name = "adam"
alpha = 0.01
"#;

#[test]
fn verify_gradients_passes() {
    let out = adaterm(&["verify-gradients"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 16, "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn unknown_optimizer_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL.replace("name = \"adam\"", "name = \"sgdx\""));
    let out = adaterm(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("optimizer[1].name"), "{err}");
    assert!(err.contains("sgdx"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL.replace("trials = 3", "trials = 3\nlearning_rate = 1"));
    let out = adaterm(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("learning_rate"));
}

#[test]
fn runs_are_reproducible_and_summarize_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = adaterm(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    }
    for file in ["trials.csv", "trajectory.csv", "summary.csv"] {
        let x = fs::read(a.join("rb").join(file)).unwrap();
        let y = fs::read(b.join("rb").join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between identical runs");
    }

    let written = fs::read_to_string(a.join("rb/summary.csv")).unwrap();
    fs::remove_file(a.join("rb/summary.csv")).unwrap();
    let out = adaterm(&["summarize", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(a.join("rb/summary.csv")).unwrap(), written);
    let printed = String::from_utf8(out.stdout).unwrap();
    assert!(printed.contains("final_error_norm"));
    assert!(printed.contains("rb:p=0.15"));
}

#[test]
fn surface_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tau.csv");
    let out = adaterm(&["surface", "tau-surface", "--points", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("nu_tilde,deviation,tau_mv"));
    assert_eq!(lines.count(), 25);

    let out = adaterm(&["surface", "fig2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn regret_subcommand_writes_per_run_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "regret.toml",
        r#"
schema_version = 1
[[experiment]]
id = "reg"
kind = "regret"
dims = [2]
horizon = 200
trials = 2
[[experiment.optimizer]]
name = "adaterm"
alpha = 0.1
lr_schedule = "inverse_sqrt"
"#,
    );
    let out = adaterm(&["regret", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = fs::read_to_string(dir.path().join("reg/regret_adaterm_d2_seed0.csv")).unwrap();
    let mut lines = run.lines();
    assert_eq!(lines.next(), Some("t,loss,regret_prefix,bound_rhs_prefix,tau_t"));
    assert_eq!(lines.count(), 200);
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = HarnessConfig::load(&path).unwrap();
            assert!(!cfg.experiments().unwrap().is_empty(), "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
