use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spherevortex_core::elliptic::Method;
use spherevortex_core::VortexSystem;

use crate::CliError;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_ENV: &str = "SPHEREVORTEX_OUTPUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub mask_radius: f64,
    pub method: Method,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-9,
            max_iter: 200,
            mask_radius: spherevortex_core::elliptic::DEFAULT_MASK_RADIUS,
            method: Method::NewtonKrylov,
        }
    }
}

/// Which unknowns Newton may move before an ansatz is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refine {
    /// φ pinned for all vortices and θ for the first; W free.
    Traveling,
    /// Only the first φ and W pinned.
    Gauge,
    /// Use the system as given.
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Vortex system in the `{vortices: [...], W}` layout.
    pub system: serde_json::Value,
    pub epsilon: Vec<f64>,
    pub gamma: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed_tag: String,
    #[serde(default = "default_refine")]
    pub refine: Refine,
    /// Sphere rotation rate applied to exported speeds and vorticity.
    #[serde(default)]
    pub rotation: f64,
}

fn default_refine() -> Refine {
    Refine::Traveling
}

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.json");

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            None => DEFAULT_CONFIG.to_string(),
        };
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config JSON: {e}")))?;
        if let Ok(dir) = std::env::var(OUTPUT_ENV) {
            if !dir.is_empty() {
                cfg.output_dir = PathBuf::from(dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.epsilon.is_empty() {
            return Err(CliError::Config("epsilon list is empty".into()));
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(**e > 0.0 && **e <= 0.5)) {
            return Err(CliError::Config(format!("epsilon {e} outside (0, 0.5]")));
        }
        if !self.grid.n_phi.is_power_of_two() {
            return Err(CliError::Config(format!("n_phi {} is not a power of two", self.grid.n_phi)));
        }
        if !(self.gamma >= 1.0) {
            return Err(CliError::Config(format!("gamma {} below 1", self.gamma)));
        }
        self.vortex_system()?;
        Ok(())
    }

    pub fn vortex_system(&self) -> Result<VortexSystem, CliError> {
        VortexSystem::from_json_str(&self.system.to_string()).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses() {
        let cfg: RunConfig = serde_json::from_str(DEFAULT_CONFIG).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.vortex_system().unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg: RunConfig = serde_json::from_str(DEFAULT_CONFIG).unwrap();
        cfg.grid.n_phi = 1000;
        assert!(cfg.validate().is_err());
        cfg.grid.n_phi = 1024;
        cfg.epsilon = vec![0.7];
        assert!(cfg.validate().is_err());
    }
}
