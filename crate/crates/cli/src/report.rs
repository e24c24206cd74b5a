//! Run summaries, pass/fail checks and artifact writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

pub const TOOL: &str = "dnull";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A scalar compared against optional bounds. Non-finite values fail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        value: f64,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Self {
        let pass = value.is_finite()
            && lower.map_or(true, |l| value >= l)
            && upper.map_or(true, |u| value <= u);
        Self {
            name: name.into(),
            value,
            lower,
            upper,
            pass,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, None, Some(limit))
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Some(limit), None)
    }

    pub fn within(name: impl Into<String>, value: f64, range: [f64; 2]) -> Self {
        Self::new(name, value, Some(range[0]), Some(range[1]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// A numeric table written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// What a command produced before it is written out.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    /// A module error that stopped the run; the status is then `fail`.
    pub error: Option<String>,
}

impl Outcome {
    pub fn status(&self) -> Status {
        if self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass) {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// `summary.json`; field order is fixed by declaration order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub status: Status,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub artifacts: Vec<String>,
    pub error: Option<String>,
}

impl Summary {
    pub fn new(config: &RunConfig, outcome: &Outcome) -> Self {
        let mut echo = config.clone();
        echo.output_dir = None;
        let mut artifacts = vec!["summary.json".to_string(), "checks.csv".to_string()];
        artifacts.extend(outcome.tables.iter().map(Table::file_name));
        Self {
            tool: TOOL,
            tool_version: VERSION,
            command: config.command.name().to_string(),
            seed: config.seed,
            status: outcome.status(),
            config: echo,
            checks: outcome.checks.clone(),
            notes: outcome.notes.clone(),
            artifacts,
            error: outcome.error.clone(),
        }
    }
}

fn checks_table(checks: &[Check]) -> String {
    let mut out = String::from("name,value,lower,upper,pass\n");
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
    for c in checks {
        out.push_str(&format!(
            "{},{:.16e},{},{},{}\n",
            c.name,
            c.value,
            opt(c.lower),
            opt(c.upper),
            c.pass
        ));
    }
    out
}

/// Writes `summary.json`, `checks.csv` and one CSV per table into `dir`.
pub fn write_artifacts(
    dir: &Path,
    summary: &Summary,
    outcome: &Outcome,
) -> Result<(), ConfigError> {
    let io = |e: std::io::Error| ConfigError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let write = |name: &str, body: &[u8]| -> Result<(), ConfigError> {
        let mut f = fs::File::create(dir.join(name)).map_err(io)?;
        f.write_all(body).map_err(io)
    };
    let mut json = serde_json::to_vec_pretty(summary).expect("summary serializes");
    json.push(b'\n');
    write("summary.json", &json)?;
    write("checks.csv", checks_table(&outcome.checks).as_bytes())?;
    for t in &outcome.tables {
        write(&t.file_name(), t.to_csv().as_bytes())?;
    }
    Ok(())
}
