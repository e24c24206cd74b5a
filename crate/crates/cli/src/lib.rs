//! Command-line harness: JSON run configs in, `summary.json` and CSV tables
//! out, with exit code 0 on pass, 1 on fail and 2 on a rejected config.

pub mod commands;
pub mod config;
pub mod presets;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{Command, ConfigError, RunConfig};
pub use report::{Check, Outcome, Status, Summary, Table};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DNULL_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "dnull-out";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Command-line inputs after argument parsing.
#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    /// Value of the output-directory environment variable, if set.
    pub env_out: Option<PathBuf>,
}

/// Reads, overrides and validates the config named by `inv`.
pub fn load(inv: &Invocation) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(&inv.config).map_err(|e| ConfigError::Io {
        path: inv.config.display().to_string(),
        message: e.to_string(),
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    if cfg.command != inv.command {
        return Err(ConfigError::invalid(
            "command",
            format!("config is for {}, invoked as {}", cfg.command, inv.command),
        ));
    }
    cfg.apply_overrides(inv.grid, inv.seed);
    cfg.validate()?;
    Ok(cfg)
}

/// `--out`, then the config's `output_dir`, then the environment, then a
/// fixed fallback.
pub fn output_dir(inv: &Invocation, cfg: &RunConfig) -> PathBuf {
    inv.out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| inv.env_out.clone())
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

/// Runs a loaded config and writes its artifacts into `dir`.
pub fn run_to(cfg: &RunConfig, dir: &Path) -> Result<Summary, ConfigError> {
    let outcome = commands::run(cfg)?;
    let summary = Summary::new(cfg, &outcome);
    report::write_artifacts(dir, &summary, &outcome)?;
    Ok(summary)
}

/// Full invocation; returns the process exit code and prints one status
/// line to stdout or an error to stderr.
pub fn execute(inv: &Invocation) -> i32 {
    let result = load(inv).and_then(|cfg| {
        let dir = output_dir(inv, &cfg);
        run_to(&cfg, &dir).map(|s| (s, dir))
    });
    match result {
        Ok((summary, dir)) => {
            let failed: Vec<&str> = summary
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.as_str())
                .collect();
            match summary.status {
                Status::Pass => {
                    println!(
                        "{}: pass ({} checks) -> {}",
                        summary.command,
                        summary.checks.len(),
                        dir.display()
                    );
                    EXIT_PASS
                }
                Status::Fail => {
                    let why = summary
                        .error
                        .clone()
                        .unwrap_or_else(|| format!("failed checks: {}", failed.join(", ")));
                    println!("{}: fail ({why}) -> {}", summary.command, dir.display());
                    EXIT_FAIL
                }
            }
        }
        Err(e) => {
            eprintln!("config error: {e}");
            EXIT_CONFIG
        }
    }
}
