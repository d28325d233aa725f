//! Experiment configuration files.
//!
//! Configs are JSON. The fingerprint is the first 16 hex digits of the
//! SHA-256 of the config's canonical serialization, and is stamped on every
//! output file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arms::StrategyKind;
use crate::environment::{load_matrix_file, EnvironmentSpec, NoiseModel};
use crate::error::{invalid, Result};
use crate::mechanism::MechanismConfig;
use crate::metrics::{DeviationMethod, ORACLE_MAX_GRID};
use crate::simulator::expand_profile;

fn one() -> usize {
    1
}
fn default_deviation_runs() -> usize {
    100
}

/// Explicit instance stored in the plain-text matrix format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    /// Resolved against the config file's directory when relative.
    pub path: PathBuf,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Defaults to `||theta_star||`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationConfig {
    /// Arms to analyse; every arm when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<usize>>,
    #[serde(default)]
    pub menu: Vec<StrategyKind>,
    #[serde(default = "default_deviation_runs")]
    pub runs: usize,
    #[serde(default = "default_method")]
    pub method: DeviationMethod,
    /// Report grid for exhaustive fixed-sequence deviations (exact method only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<Vec<f64>>>,
}

fn default_method() -> DeviationMethod {
    DeviationMethod::MonteCarlo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<MatrixFile>,
    pub mechanisms: Vec<MechanismConfig>,
    /// One strategy per arm, or a single strategy shared by all arms.
    pub profile: Vec<StrategyKind>,
    #[serde(default = "one")]
    pub epochs: usize,
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Record underreporting counts and manipulation-bound checks.
    #[serde(default)]
    pub instrument: bool,
    /// Write every `round_stride`-th round (and the last) to rounds.csv.
    #[serde(default = "one")]
    pub round_stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads and validates a config; relative matrix paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_json(&text)?;
        if let Some(m) = &mut config.matrix_file {
            if m.path.is_relative() {
                if let Some(dir) = path.parent() {
                    m.path = dir.join(&m.path);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_canonical_json().as_bytes());
        hex::encode(&digest[..8])
    }

    /// The environment spec, loading the matrix file if that is the source.
    pub fn environment_spec(&self) -> Result<EnvironmentSpec> {
        match (&self.environment, &self.matrix_file) {
            (Some(env), None) => Ok(env.clone()),
            (None, Some(m)) => load_matrix_file(&m.path, m.noise.clone(), m.s_bound),
            _ => Err(invalid("environment", "give exactly one of environment or matrix_file")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let env = self.environment_spec()?;
        env.validate()?;
        if self.mechanisms.is_empty() {
            return Err(invalid("mechanisms", "must list at least one mechanism"));
        }
        for m in &self.mechanisms {
            m.validate()?;
        }
        for k in expand_profile(&self.profile, env.num_arms)? {
            k.validate(env.dim)?;
        }
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(invalid("runs", "must be at least 1"));
        }
        if self.round_stride == 0 {
            return Err(invalid("round_stride", "must be at least 1"));
        }
        if let Some(dev) = &self.deviation {
            if let Some(arms) = &dev.arms {
                if let Some(a) = arms.iter().find(|&&a| a >= env.num_arms) {
                    return Err(invalid("deviation.arms", format!("arm {a} out of range")));
                }
            }
            for k in &dev.menu {
                k.validate(env.dim)?;
            }
            match dev.method {
                DeviationMethod::MonteCarlo => {
                    if dev.runs < 2 {
                        return Err(invalid("deviation.runs", "needs at least 2 runs"));
                    }
                    if dev.menu.is_empty() {
                        return Err(invalid("deviation.menu", "must not be empty"));
                    }
                }
                DeviationMethod::Exact => {
                    if let Some(grid) = &dev.grid {
                        if grid.is_empty() || grid.len() > ORACLE_MAX_GRID {
                            return Err(invalid("deviation.grid", format!("must hold 1..={ORACLE_MAX_GRID} points")));
                        }
                        if grid.iter().any(|g| g.len() != env.dim) {
                            return Err(invalid("deviation.grid", "points must have length dim"));
                        }
                    } else if dev.menu.is_empty() {
                        return Err(invalid("deviation", "exact method needs a menu or a grid"));
                    }
                }
            }
        }
        Ok(())
    }
}
