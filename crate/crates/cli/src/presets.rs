//! Named data sets and their parameters.

use std::collections::BTreeMap;

use crate::config::{Command, ConfigError, Dataset};
use Command::*;

/// A preset name, the commands that accept it, and its parameters with
/// defaults. `inner`/`outer` bound the domain: Euclidean radius for lattice
/// data, area radius for Schwarzschild slices, distance for radial data
/// (Euclidean radius for `minkowski-log`).
struct Entry {
    name: &'static str,
    commands: &'static [Command],
    params: &'static [(&'static str, f64)],
}

const MINKOWSKI: &[Command] = &[VerifyMinkowski, VerifyIdentity];
const ANALYTIC: &[Command] = &[VerifyIdentity, VerifyStern, RiemannianIdentity];
const RADIAL: &[Command] = &[FlowSpherical, SolveA0];

const ENTRIES: &[Entry] = &[
    Entry {
        name: "minkowski-t0",
        commands: MINKOWSKI,
        params: &[("inner", 1.0), ("outer", 2.0), ("perturb", 0.0)],
    },
    Entry {
        name: "minkowski-boost",
        commands: MINKOWSKI,
        params: &[("a", 0.4), ("inner", 1.0), ("outer", 2.0), ("perturb", 0.0)],
    },
    Entry {
        name: "minkowski-graph",
        commands: MINKOWSKI,
        params: &[("c", 0.1), ("inner", 1.0), ("outer", 2.0), ("perturb", 0.0)],
    },
    Entry {
        name: "random-analytic",
        commands: ANALYTIC,
        params: &[],
    },
    Entry {
        name: "flat-radius",
        commands: ANALYTIC,
        params: &[("inner", 1.0), ("outer", 2.0)],
    },
    Entry {
        name: "random-charged",
        commands: &[VerifyCharged],
        params: &[],
    },
    Entry {
        name: "coulomb",
        commands: &[VerifyCharged],
        params: &[("q", 1.0), ("inner", 1.0), ("outer", 2.0)],
    },
    Entry {
        name: "schwarzschild-t0",
        commands: &[VerifySchwarzschild, FlowSpherical, SolveA0],
        params: &[("m", 1.0), ("inner", 3.0), ("outer", 8.0)],
    },
    Entry {
        name: "schwarzschild-tilted",
        commands: &[VerifySchwarzschild],
        params: &[("m", 1.0), ("c", 0.1), ("inner", 3.0), ("outer", 8.0)],
    },
    Entry {
        name: "flat",
        commands: RADIAL,
        params: &[("inner", 1.0), ("outer", 3.0)],
    },
    Entry {
        name: "umbilic",
        commands: RADIAL,
        params: &[("xi", 0.2), ("inner", 1.0), ("outer", 3.0)],
    },
    Entry {
        name: "dec-perturbed",
        commands: RADIAL,
        params: &[
            ("m", 1.0),
            ("epsilon", 0.25),
            ("inner", 0.0),
            ("outer", 20.0),
        ],
    },
    Entry {
        name: "rippled",
        commands: RADIAL,
        params: &[("amplitude", 0.3), ("inner", 1.0), ("outer", 6.0)],
    },
    Entry {
        name: "minkowski-log",
        commands: RADIAL,
        params: &[("c", 0.5), ("inner", 1.0), ("outer", 2.0)],
    },
];

/// Radial Schwarzschild data is parametrized by distance from the throat.
const SCHWARZSCHILD_RADIAL: [(&str, f64); 3] = [("m", 1.0), ("inner", 0.0), ("outer", 20.0)];

/// A preset with every parameter resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl Resolved {
    pub fn get(&self, key: &str) -> f64 {
        self.params[key]
    }

    pub fn range(&self) -> [f64; 2] {
        [self.get("inner"), self.get("outer")]
    }
}

pub fn names() -> impl Iterator<Item = &'static str> {
    ENTRIES.iter().map(|e| e.name)
}

pub fn resolve(command: Command, dataset: &Dataset) -> Result<Resolved, ConfigError> {
    let name = dataset.preset.as_deref().unwrap_or("table");
    if name == "table" {
        if !command.is_radial() {
            return Err(ConfigError::invalid(
                "dataset",
                format!("{command} does not accept tables"),
            ));
        }
        return check_params(name, &[], &dataset.params);
    }
    let entry = ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| {
        ConfigError::invalid("dataset.preset", format!("unknown preset `{name}`"))
    })?;
    if !entry.commands.contains(&command) {
        return Err(ConfigError::invalid(
            "dataset.preset",
            format!("`{name}` is not available for {command}"),
        ));
    }
    let defaults = if name == "schwarzschild-t0" && command.is_radial() {
        &SCHWARZSCHILD_RADIAL[..]
    } else {
        entry.params
    };
    check_params(name, defaults, &dataset.params)
}

fn check_params(
    name: &str,
    defaults: &[(&str, f64)],
    given: &BTreeMap<String, f64>,
) -> Result<Resolved, ConfigError> {
    let mut params: BTreeMap<String, f64> =
        defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in given {
        match params.get_mut(k) {
            Some(slot) => *slot = *v,
            None => {
                return Err(ConfigError::invalid(
                    format!("dataset.params.{k}"),
                    format!("unknown parameter for `{name}`"),
                ))
            }
        }
    }
    if let (Some(&lo), Some(&hi)) = (params.get("inner"), params.get("outer")) {
        if !(lo < hi) {
            return Err(ConfigError::invalid(
                "dataset.params",
                "needs inner < outer",
            ));
        }
    }
    Ok(Resolved {
        name: name.to_string(),
        params,
    })
}
