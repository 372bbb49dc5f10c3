//! The single JSON run configuration: environment, grid, reward and training
//! sections. Sections may be omitted entirely (defaults apply) but a present
//! section must be complete.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use lexi_morl_core::envsim::EnvConfig;
use lexi_morl_core::observe::GridSpec;
use lexi_morl_core::rewards::SpeedMode;
use lexi_morl_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct FileConfig {
    pub grid: GridSpec,
    pub env: EnvConfig,
    pub reward: RewardSection,
    pub train: TrainConfig,
}

/// Reward knobs that are not already part of the environment section (the
/// safety parameters live there, since the simulator classifies events with
/// them).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RewardSection {
    pub speed_mode: SpeedMode,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: FileConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate().context("environment section")?;
        self.train.validate().context("training section")?;
        self.env.safety.validate().context("reward section")?;
        Ok(())
    }
}
