use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use dnull_cli::{Command, ConfigError, RunConfig};

fn bin() -> Proc {
    let mut p = Proc::new(env!("CARGO_BIN_EXE_dnull"));
    p.env_remove(dnull_cli::OUT_DIR_ENV);
    p
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &str, config: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn unknown_key_is_named() {
    let err = RunConfig::parse(
        r#"{"command": "verify-stern", "dataset": {"preset": "flat-radius"}, "tolerance": 1}"#,
    )
    .unwrap_err();
    match err {
        ConfigError::ParseError { line, message, .. } => {
            assert_eq!(line, 1);
            assert!(message.contains("tolerance"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn parse_error_reports_position() {
    let err =
        RunConfig::parse("{\n  \"command\": \"verify-stern\",\n  \"dataset\": {,\n}").unwrap_err();
    assert!(
        matches!(err, ConfigError::ParseError { line: 3, .. }),
        "{err:?}"
    );
}

#[test]
fn validation_names_field_and_constraint() {
    let cfg = RunConfig::parse(
        r#"{"command": "verify-stern", "dataset": {"preset": "flat-radius"}, "tol": -1}"#,
    )
    .unwrap();
    assert_eq!(
        cfg.validate(),
        Err(ConfigError::invalid("tol", "must be positive"))
    );
    let cfg = RunConfig::parse(r#"{"command": "verify-stern", "dataset": {"preset": "nowhere"}}"#)
        .unwrap();
    let err = dnull_cli::commands::run(&cfg).unwrap_err();
    assert!(
        matches!(&err, ConfigError::ValidationError { field, .. } if field == "dataset.preset"),
        "{err:?}"
    );
    let cfg = RunConfig::parse(
        r#"{"command": "verify-stern", "dataset": {"preset": "flat-radius", "params": {"m": 1}}}"#,
    )
    .unwrap();
    let err = dnull_cli::commands::run(&cfg).unwrap_err();
    assert!(
        matches!(&err, ConfigError::ValidationError { field, .. } if field == "dataset.params.m"),
        "{err:?}"
    );
}

#[test]
fn overrides_are_echoed_without_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "verify-stern", "dataset": {"preset": "flat-radius"}, "output_dir": "ignored"}"#,
    );
    let out = tmp.path().join("out");
    let o = run(
        "verify-stern",
        &cfg,
        &[
            "--out",
            out.to_str().unwrap(),
            "--grid",
            "3",
            "--seed",
            "11",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = summary(&out);
    assert_eq!(s["seed"], 11);
    assert_eq!(s["config"]["grid"]["lattice"], 3);
    assert!(s["config"].get("output_dir").is_none());
    assert_eq!(s["status"], "pass");
    for name in s["artifacts"].as_array().unwrap() {
        assert!(out.join(name.as_str().unwrap()).is_file());
    }
    let points = fs::read_to_string(out.join("stern_points.csv")).unwrap();
    assert_eq!(points.lines().count(), 1 + 27);
}

#[test]
fn summary_keys_keep_their_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "verify-stern", "dataset": {"preset": "flat-radius"}}"#,
    );
    let out = tmp.path().join("o");
    assert_eq!(
        run("verify-stern", &cfg, &["--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let text = fs::read_to_string(out.join("summary.json")).unwrap();
    let keys = [
        "\"tool\"",
        "\"tool_version\"",
        "\"command\"",
        "\"seed\"",
        "\"status\"",
        "\"config\"",
        "\"checks\"",
    ];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{pos:?}");
}

#[test]
fn environment_sets_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "verify-stern", "dataset": {"preset": "flat-radius"}}"#,
    );
    let env_dir = tmp.path().join("from-env");
    let o = bin()
        .env(dnull_cli::OUT_DIR_ENV, &env_dir)
        .args(["verify-stern", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("summary.json").is_file());
    let explicit = tmp.path().join("explicit");
    let o = bin()
        .env(dnull_cli::OUT_DIR_ENV, &env_dir)
        .args(["verify-stern", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&explicit)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(explicit.join("summary.json").is_file());
}

#[test]
fn command_mismatch_and_bad_arguments_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "verify-stern", "dataset": {"preset": "flat-radius"}}"#,
    );
    assert_eq!(run("verify-identity", &cfg, &[]).status.code(), Some(2));
    assert_eq!(
        run("verify-stern", &cfg, &["--grid", "many"]).status.code(),
        Some(2)
    );
    assert_eq!(run("no-such-command", &cfg, &[]).status.code(), Some(2));
    assert_eq!(
        run("verify-stern", &tmp.path().join("missing.json"), &[])
            .status
            .code(),
        Some(2)
    );
    let o = run("verify-stern", &cfg, &["--grid", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.lattice"));
}

#[test]
fn module_errors_fail_with_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "flow-spherical", "dataset": {"preset": "umbilic", "params": {"xi": 0.5}}}"#,
    );
    let out = tmp.path().join("o");
    assert_eq!(
        run("flow-spherical", &cfg, &["--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let s = summary(&out);
    assert_eq!(s["status"], "fail");
    assert!(s["error"].as_str().unwrap().contains("horizon"));
}

#[test]
fn inline_table_runs_the_flow() {
    let n = 60;
    let r: Vec<f64> = (0..n)
        .map(|i| 1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect();
    let table = serde_json::json!({ "r": r, "rho": r, "kn": vec![0.0; n], "kt": vec![0.0; n] });
    let cfg = serde_json::json!({ "command": "flow-spherical", "dataset": { "table": table }, "grid": { "nodes": 401 } });
    let cfg: RunConfig = serde_json::from_value(cfg).unwrap();
    assert_eq!(cfg.command, Command::FlowSpherical);
    let out = dnull_cli::commands::run(&cfg).unwrap();
    assert!(out.error.is_none(), "{:?}", out.error);
    assert_eq!(out.status(), dnull_cli::Status::Pass, "{:?}", out.checks);
}

#[test]
fn solver_without_boundary_data_needs_an_exact_pair() {
    let cfg =
        RunConfig::parse(r#"{"command": "solve-a0", "dataset": {"preset": "rippled"}}"#).unwrap();
    let err = dnull_cli::commands::run(&cfg).unwrap_err();
    assert!(
        matches!(&err, ConfigError::ValidationError { field, .. } if field == "boundary"),
        "{err:?}"
    );
    let cfg = RunConfig::parse(
        r#"{"command": "solve-a0", "dataset": {"preset": "flat"},
            "boundary": {"c_minus": 1, "c_plus": 3, "d_minus": 1, "d_plus": 3},
            "schedule": {"eps_ladder": [5]}}"#,
    )
    .unwrap();
    let err = dnull_cli::commands::run(&cfg).unwrap_err();
    assert!(
        matches!(&err, ConfigError::ValidationError { field, .. } if field == "schedule"),
        "{err:?}"
    );
}
