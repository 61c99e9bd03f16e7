//! Experiment configuration shared by the command line and JSON files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{AngleKind, AngleUnit, ExactAngle};
use crate::oracle::{MeasurementSet, N_ENUM};
use crate::protocol::{ProtocolConfig, Variant};
use crate::randomness::DEFAULT_K_MAX;

/// Measurement angles of one party, as literals in the config's unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleSpec {
    pub theta: String,
    pub phi: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub angles: Vec<AngleSpec>,
    #[serde(default)]
    pub unit: AngleUnit,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k_max", alias = "kmax")]
    pub k_max: u32,
    /// Output directory; [`DEFAULT_OUT_DIR`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

pub const DEFAULT_OUT_DIR: &str = "ghzsim-out";

fn default_trials() -> u64 {
    10_000
}

fn default_k_max() -> u32 {
    DEFAULT_K_MAX
}

impl ExperimentConfig {
    /// A config with the given angle literals and defaults elsewhere.
    pub fn new(thetas: &[&str], phis: &[&str], unit: AngleUnit) -> Result<Self> {
        if thetas.len() != phis.len() {
            return Err(Error::InvalidConfig(format!("{} theta values but {} phi values", thetas.len(), phis.len())));
        }
        Ok(ExperimentConfig {
            n: thetas.len(),
            angles: thetas
                .iter()
                .zip(phis)
                .map(|(t, p)| AngleSpec { theta: t.to_string(), phi: p.to_string() })
                .collect(),
            unit,
            variant: Variant::default(),
            trials: default_trials(),
            seed: 0,
            k_max: default_k_max(),
            out_dir: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.angles.len() != self.n {
            return Err(Error::InvalidConfig(format!("n = {} but {} angle pairs given", self.n, self.angles.len())));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be positive".into()));
        }
        self.measurement_set().map(|_| ())
    }

    pub fn measurement_set(&self) -> Result<MeasurementSet> {
        let mut thetas = Vec::with_capacity(self.n);
        let mut phis = Vec::with_capacity(self.n);
        for a in &self.angles {
            thetas.push(ExactAngle::parse(&a.theta, self.unit, AngleKind::Azimuthal)?);
            phis.push(ExactAngle::parse(&a.phi, self.unit, AngleKind::Elevation)?);
        }
        MeasurementSet::new(thetas, phis)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            variant: self.variant,
            k_max: self.k_max,
            n_enum: N_ENUM,
            seed: self.seed,
            trials: self.trials,
            record_messages: false,
        }
    }
}
