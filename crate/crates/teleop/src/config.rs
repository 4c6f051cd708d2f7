//! JSON overrides for the robot, the behaviors and the scene. Every section
//! and field is optional; missing ones take their defaults.

use std::path::Path;

use navsim_core::behaviors::{AvoidConfig, TrackerConfig};
use navsim_core::sim::Target;
use navsim_core::RobotConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub robot: RobotConfig,
    pub tracker: TrackerConfig,
    pub avoid: AvoidConfig,
    pub targets: Vec<Target>,
    pub encoder_noise: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(#[from] navsim_core::Error),
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        let cfg = Self::from_json(&text).map_err(|source| ConfigError::Parse {
            path: shown,
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> navsim_core::Result<()> {
        self.robot.validate()?;
        self.tracker.validate()?;
        self.avoid.validate()?;
        if !(self.encoder_noise >= 0.0 && self.encoder_noise.is_finite()) {
            return Err(navsim_core::Error::InvalidArgument(
                "encoder_noise must be a non-negative number".into(),
            ));
        }
        Ok(())
    }
}
