//! Run configuration: parsing, overrides and validation.

use std::collections::BTreeMap;
use std::fmt;

use dnull_core::elliptic::{BoundaryData, ContinuationSchedule};
use dnull_core::identity::{ChargedFlux, LADDER};
use dnull_core::spherical::RadialTable;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rejected configurations. Either variant maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {constraint}")]
    ValidationError { field: String, constraint: String },
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        ConfigError::ValidationError {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Command {
    VerifyMinkowski,
    VerifyIdentity,
    VerifyStern,
    VerifyCharged,
    VerifySchwarzschild,
    FlowSpherical,
    SolveA0,
    RiemannianIdentity,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::VerifyMinkowski,
        Command::VerifyIdentity,
        Command::VerifyStern,
        Command::VerifyCharged,
        Command::VerifySchwarzschild,
        Command::FlowSpherical,
        Command::SolveA0,
        Command::RiemannianIdentity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyMinkowski => "verify-minkowski",
            Command::VerifyIdentity => "verify-identity",
            Command::VerifyStern => "verify-stern",
            Command::VerifyCharged => "verify-charged",
            Command::VerifySchwarzschild => "verify-schwarzschild",
            Command::FlowSpherical => "flow-spherical",
            Command::SolveA0 => "solve-a0",
            Command::RiemannianIdentity => "riemannian-identity",
        }
    }

    /// Radial commands take `grid.nodes`; the rest sample a lattice.
    pub fn is_radial(self) -> bool {
        matches!(self, Command::FlowSpherical | Command::SolveA0)
    }

    pub fn default_tol(self) -> f64 {
        match self {
            Command::VerifyMinkowski | Command::FlowSpherical => 1e-8,
            Command::VerifySchwarzschild => 1e-7,
            Command::SolveA0 => 1e-4,
            _ => 1e-5,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Either a named preset with numeric parameters or an inline radial table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<RadialTable>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// Points per direction of the sampling lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<usize>,
    /// Radial nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Finite-difference steps for the divergence, coarse to fine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub dataset: Dataset,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Accepted range of the observed convergence order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// `a` in the source `a·∇̄²(ν,ν)`; absent means self-sourced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default)]
    pub flux: ChargedFlux,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ContinuationSchedule>,
}

/// Lattice for identity residuals, which evaluate a derivative ladder.
pub const DEFAULT_LATTICE: usize = 4;
/// Lattice for pointwise algebraic checks.
pub const DENSE_LATTICE: usize = 10;
/// Radial nodes for the solver.
pub const DEFAULT_NODES: usize = 401;
/// Radial nodes for the flow, whose RK4 profile is checked to 1e-10.
pub const FLOW_NODES: usize = 2001;
pub const DEFAULT_ORDER: [f64; 2] = [1.8, 2.2];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::ParseError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn apply_overrides(&mut self, grid: Option<usize>, seed: Option<u64>) {
        if let Some(n) = grid {
            if self.command.is_radial() {
                self.grid.nodes = Some(n);
            } else {
                self.grid.lattice = Some(n);
            }
        }
        if let Some(s) = seed {
            self.seed = s;
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or_else(|| self.command.default_tol())
    }

    pub fn order(&self) -> [f64; 2] {
        self.order.unwrap_or(DEFAULT_ORDER)
    }

    pub fn lattice(&self) -> usize {
        let fallback = match self.command {
            Command::VerifyMinkowski | Command::VerifySchwarzschild => DENSE_LATTICE,
            _ => DEFAULT_LATTICE,
        };
        self.grid.lattice.unwrap_or(fallback)
    }

    pub fn nodes(&self) -> usize {
        let fallback = match self.command {
            Command::FlowSpherical => FLOW_NODES,
            _ => DEFAULT_NODES,
        };
        self.grid.nodes.unwrap_or(fallback)
    }

    pub fn ladder(&self) -> Vec<f64> {
        self.grid.ladder.clone().unwrap_or_else(|| LADDER.to_vec())
    }

    /// Numeric and structural checks that need no geometry.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, "must be positive"))
            }
        };
        if let Some(t) = self.tol {
            positive("tol", t)?;
        }
        if let Some([lo, hi]) = self.order {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ConfigError::invalid(
                    "order",
                    "must be a finite range [lo, hi] with lo <= hi",
                ));
            }
        }
        if let Some(n) = self.grid.lattice {
            if n < 2 {
                return Err(ConfigError::invalid("grid.lattice", "must be at least 2"));
            }
        }
        if let Some(n) = self.grid.nodes {
            if n < 5 {
                return Err(ConfigError::invalid("grid.nodes", "must be at least 5"));
            }
        }
        if let Some(l) = &self.grid.ladder {
            if l.is_empty() {
                return Err(ConfigError::invalid("grid.ladder", "must not be empty"));
            }
            for &h in l {
                positive("grid.ladder", h)?;
            }
            if l.windows(2).any(|w| w[1] >= w[0]) {
                return Err(ConfigError::invalid(
                    "grid.ladder",
                    "must be strictly decreasing",
                ));
            }
        }
        if let Some(a) = self.a {
            if !a.is_finite() {
                return Err(ConfigError::invalid("a", "must be finite"));
            }
        }
        for (k, v) in &self.dataset.params {
            if !v.is_finite() {
                return Err(ConfigError::invalid(
                    format!("dataset.params.{k}"),
                    "must be finite",
                ));
            }
        }
        match (&self.dataset.preset, &self.dataset.table) {
            (None, None) => {
                return Err(ConfigError::invalid("dataset", "needs `preset` or `table`"))
            }
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid(
                    "dataset",
                    "`preset` and `table` are exclusive",
                ))
            }
            (None, Some(_)) if !self.command.is_radial() => {
                return Err(ConfigError::invalid(
                    "dataset.table",
                    "only radial commands accept tables",
                ))
            }
            _ => {}
        }
        if self.boundary.is_some() && self.command != Command::SolveA0 {
            return Err(ConfigError::invalid(
                "boundary",
                "only solve-a0 takes boundary data",
            ));
        }
        if self.schedule.is_some() && self.command != Command::SolveA0 {
            return Err(ConfigError::invalid(
                "schedule",
                "only solve-a0 takes a schedule",
            ));
        }
        if let Some(bc) = &self.boundary {
            bc.validate()
                .map_err(|e| ConfigError::invalid("boundary", e.to_string()))?;
        }
        Ok(())
    }
}
