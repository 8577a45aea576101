//! Run configuration: a JSON config file, flag overrides, solver defaults.

use std::path::Path;

use deconfound_core::io::Roles;
use deconfound_core::projection::SolverConfig;
use serde::Deserialize;

use crate::CliError;

/// On-disk config file; every field optional, flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub outcome: Option<String>,
    pub exposure: Option<String>,
    pub confounders: Option<Vec<String>>,
    pub event_level: Option<String>,
    pub reference_exposure: Option<String>,
    pub pseudo_count: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub roles: Roles,
    pub solver: SolverConfig,
}

#[derive(Debug, Default)]
pub struct RoleFlags {
    pub outcome: Option<String>,
    pub exposure: Option<String>,
    pub confounders: Option<Vec<String>>,
    pub event: Option<String>,
    pub reference: Option<String>,
    pub pseudo_count: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl RunConfig {
    pub fn resolve(config_path: Option<&Path>, flags: RoleFlags) -> Result<RunConfig, CliError> {
        let file: ConfigFile = match config_path {
            None => ConfigFile::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read config {path:?}: {e}")))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("bad config {path:?}: {e}")))?
            }
        };
        let require = |flag: Option<String>, file: Option<String>, what: &str| {
            flag.or(file)
                .ok_or_else(|| CliError::config(format!("missing `{what}` (flag or config file)")))
        };
        let roles = Roles {
            outcome: require(flags.outcome, file.outcome, "outcome")?,
            exposure: require(flags.exposure, file.exposure, "exposure")?,
            confounders: flags.confounders.or(file.confounders),
            event_level: require(flags.event, file.event_level, "event")?,
            reference_exposure: require(flags.reference, file.reference_exposure, "reference")?,
        };
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            epsilon: flags.pseudo_count.or(file.pseudo_count).unwrap_or(defaults.epsilon),
            tolerance: flags.tol.or(file.tolerance).unwrap_or(defaults.tolerance),
            max_iterations: flags
                .max_iter
                .or(file.max_iterations)
                .unwrap_or(defaults.max_iterations),
        };
        if !(solver.tolerance > 0.0) {
            return Err(CliError::config("tolerance must be positive"));
        }
        if !(solver.epsilon >= 0.0) {
            return Err(CliError::config("pseudo-count must be non-negative"));
        }
        if solver.max_iterations == 0 {
            return Err(CliError::config("max-iter must be at least 1"));
        }
        Ok(RunConfig { roles, solver })
    }
}

/// Parses a `start:stop:step` grid spec into delta values, endpoints
/// inclusive when the step lands on them.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::config(format!("bad grid `{spec}`: {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:stop:step"));
    }
    let start: f64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
    let stop: f64 = parts[1].parse().map_err(|_| bad("stop is not a number"))?;
    let step: f64 = parts[2].parse().map_err(|_| bad("step is not a number"))?;
    if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) {
        return Err(bad("bounds must lie in [0, 1]"));
    }
    if start > stop {
        return Err(bad("start exceeds stop"));
    }
    if !(step > 0.0) {
        return Err(bad("step must be positive"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=count)
        .map(|i| (start + i as f64 * step).min(stop))
        .collect();
    Ok(grid)
}
