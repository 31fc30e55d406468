//! Scenario files.
//!
//! A scenario file is a JSON object with the same fields as [`SimConfig`]
//! plus an optional `sweep` block. Every field has a default, unknown keys
//! are rejected, and all times are in seconds unless the key says otherwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::CostWeights;
use crate::energy::{BatterySpec, ConsumptionModel};
use crate::engine::{ChargeMode, ClassParams, FleetMix, Operations, PerClass, SimConfig};
use crate::requests::{ArrivalConfig, ServiceSpec};
use crate::DecayParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

/// A pair of surveillance weights to sweep over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightPair {
    pub w_visit: f64,
    pub w_surv: f64,
}

/// Batch of variations of the base scenario. The cells are the cartesian
/// product of the non-empty lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fleets: Vec<FleetMix>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<WeightPair>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ChargeMode>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
    pub fleet: FleetMix,
    pub mode: ChargeMode,
    pub duration_s: f64,
    pub step_s: f64,
    pub seed: u64,
    pub weights: CostWeights,
    pub decay: DecayParams,
    pub arrivals: ArrivalConfig,
    pub service: ServiceSpec,
    pub battery: BatterySpec,
    pub consumption: ConsumptionModel,
    pub vehicles: PerClass<ClassParams>,
    pub operations: Operations,
    pub snapshot_times_s: Vec<f64>,
    pub dispatch_log: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self::from_config(SimConfig::default(), None)
    }
}

impl ScenarioFile {
    pub fn from_config(c: SimConfig, sweep: Option<SweepSpec>) -> Self {
        Self {
            map: c.map,
            fleet: c.fleet,
            mode: c.mode,
            duration_s: c.duration_s,
            step_s: c.step_s,
            seed: c.seed,
            weights: c.weights,
            decay: c.decay,
            arrivals: c.arrivals,
            service: c.service,
            battery: c.battery,
            consumption: c.consumption,
            vehicles: c.vehicles,
            operations: c.operations,
            snapshot_times_s: c.snapshot_times_s,
            dispatch_log: c.dispatch_log,
            sweep,
        }
    }

    pub fn config(&self) -> SimConfig {
        SimConfig {
            map: self.map.clone(),
            fleet: self.fleet,
            mode: self.mode,
            duration_s: self.duration_s,
            step_s: self.step_s,
            seed: self.seed,
            weights: self.weights,
            decay: self.decay,
            arrivals: self.arrivals.clone(),
            service: self.service,
            battery: self.battery,
            consumption: self.consumption,
            vehicles: self.vehicles,
            operations: self.operations,
            snapshot_times_s: self.snapshot_times_s.clone(),
            dispatch_log: self.dispatch_log,
        }
    }

    /// Parses scenario text. `path` only labels diagnostics.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Reads, parses and validates a scenario file. A relative map path is
    /// resolved against the scenario file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut file = Self::parse(&text, path)?;
        if let Some(map) = &file.map {
            if map.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                file.map = Some(base.join(map));
            }
        }
        file.validate(path)?;
        Ok(file)
    }

    pub fn validate(&self, path: &Path) -> Result<(), ConfigError> {
        let invalid = |message: String| ConfigError::Invalid {
            path: path.to_path_buf(),
            message,
        };
        self.config().validate().map_err(invalid)?;
        if let Some(s) = &self.sweep {
            for w in &s.weights {
                if !(w.w_visit >= 0.0 && w.w_surv >= 0.0) {
                    return Err(invalid("sweep.weights entries must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}
