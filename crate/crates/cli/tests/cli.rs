//! End-to-end checks of the `errmeta` binary: happy path, determinism,
//! stage composition, and exit-code classes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn errmeta(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_errmeta"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, out_dir: &str, extra: &str) {
    let config = format!(
        r#"
[dataset]
path = "data.csv"
label_column = "class"
positive_value = "4"
features = ["C1", "C2"]

[split]
seed = 11
base_region = "C1>-50"
meta_region = "C2<-60"
meta_train_size = 60

[base_model]
kind = "learn"

[error_model]
kind = "gp"

[sweep]
mean_grid = [0.0, 0.5, 1.0, 2.0]

[output]
dir = "{out_dir}"
{extra}
"#
    );
    fs::write(dir.join(name), config).unwrap();
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::TempDir::new().unwrap();
    let out = errmeta(
        dir.path(),
        &["gen-data", "--out", "data.csv", "--rows", "600", "--seed", "3"],
    );
    assert!(out.status.success());
    dir
}

#[test]
fn run_produces_all_artifacts_and_is_deterministic() {
    let dir = setup();
    write_config(dir.path(), "run.toml", "out_a", "");
    let out = errmeta(dir.path(), &["run", "--config", "run.toml"]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    for name in [
        "s1.csv",
        "s2.csv",
        "s3.csv",
        "base_model.rules",
        "error_observations.csv",
        "error_model.json",
        "sweep.csv",
        "sweep.json",
        "decisions.csv",
        "manifest.json",
    ] {
        assert!(
            dir.path().join("out_a").join(name).exists(),
            "{name} missing"
        );
    }

    // Same config, fresh output directory: byte-identical sweep.
    let out = errmeta(
        dir.path(),
        &["run", "--config", "run.toml", "--out-dir", "out_b"],
    );
    assert!(out.status.success());
    let a = fs::read(dir.path().join("out_a/sweep.csv")).unwrap();
    let b = fs::read(dir.path().join("out_b/sweep.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stage_subcommands_compose_to_the_run_outputs() {
    let dir = setup();
    write_config(dir.path(), "run.toml", "out_run", "");
    assert!(errmeta(dir.path(), &["run", "--config", "run.toml"])
        .status
        .success());

    write_config(dir.path(), "staged.toml", "out_staged", "");
    for sub in ["split", "train-base", "errors", "fit", "sweep"] {
        let out = errmeta(dir.path(), &[sub, "--config", "staged.toml"]);
        assert!(
            out.status.success(),
            "{sub} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    for name in ["sweep.csv", "decisions.csv", "error_model.json"] {
        let a = fs::read(dir.path().join("out_run").join(name)).unwrap();
        let b = fs::read(dir.path().join("out_staged").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = setup();
    // A config without the mandatory seed must be rejected up front.
    let config = r#"
[dataset]
path = "data.csv"
label_column = "class"
positive_value = "4"

[split]
base_region = "C1>-50"
meta_region = "C2<-60"

[base_model]
kind = "learn"

[error_model]
kind = "gp"

[output]
dir = "out"
"#;
    fs::write(dir.path().join("bad.toml"), config).unwrap();
    let out = errmeta(dir.path(), &["run", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_file_is_a_config_error() {
    let dir = setup();
    write_config(dir.path(), "run.toml", "out", "");
    fs::remove_file(dir.path().join("data.csv")).unwrap();
    let out = errmeta(dir.path(), &["run", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_dataset_is_a_data_error() {
    let dir = setup();
    write_config(dir.path(), "run.toml", "out", "");
    fs::write(dir.path().join("data.csv"), "C1,C2,class\n1,oops,4\n").unwrap();
    let out = errmeta(dir.path(), &["run", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 1"), "stderr: {stderr}");
}

#[test]
fn oversized_meta_train_request_is_a_data_error() {
    let dir = setup();
    write_config(dir.path(), "run.toml", "out", "");
    // Rewrite with an impossible meta_train_size.
    let text = fs::read_to_string(dir.path().join("run.toml"))
        .unwrap()
        .replace("meta_train_size = 60", "meta_train_size = 50000");
    fs::write(dir.path().join("run.toml"), text).unwrap();
    let out = errmeta(dir.path(), &["run", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("fit"), "stderr lacks the stage tag: {stderr}");
}

#[test]
fn fixed_rules_file_and_thresholds_are_honored() {
    let dir = setup();
    fs::write(
        dir.path().join("fixed.rules"),
        "IF C2 <= -53.0 OR C2 <= -52.0 AND C1 <= -49.0 THEN 1 ELSE 0\n",
    )
    .unwrap();
    write_config(dir.path(), "run.toml", "out_fixed", "");
    let out = errmeta(
        dir.path(),
        &[
            "run",
            "--config",
            "run.toml",
            "--rules-file",
            "fixed.rules",
            "--mean-threshold",
            "1.0",
            "--var-threshold",
            "3.0",
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rules = fs::read_to_string(dir.path().join("out_fixed/base_model.rules")).unwrap();
    assert_eq!(
        rules.trim(),
        "IF C2 <= -53 OR C2 <= -52 AND C1 <= -49 THEN 1 ELSE 0"
    );
    // The decision dump must contain abstentions at the default policy on
    // this data (the high-C2 band is unobserved).
    let decisions = fs::read_to_string(dir.path().join("out_fixed/decisions.csv")).unwrap();
    assert!(decisions.contains(",abstain,"));
}

#[test]
fn logistic_override_switches_the_error_model() {
    let dir = setup();
    write_config(dir.path(), "run.toml", "out_logistic", "");
    let out = errmeta(
        dir.path(),
        &["run", "--config", "run.toml", "--error-model", "logistic"],
    );
    assert!(out.status.success());
    let artifact = fs::read_to_string(dir.path().join("out_logistic/error_model.json")).unwrap();
    assert!(artifact.contains("\"kind\": \"logistic\""));
}
