//! Run manifest: the fully resolved configuration plus provenance, written
//! next to every run's artifacts. Replaying a manifest's config and seed
//! reproduces the run.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use lexi_morl_core::train::TrainMode;
use serde::{Deserialize, Serialize};

use crate::config::FileConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub mode: TrainMode,
    pub config: FileConfig,
    pub seed: u64,
    pub map: String,
    /// Content hash of the workspace sources this binary was built from.
    pub code_version: String,
    pub tool_version: String,
    pub created_unix: u64,
}

pub fn code_version() -> &'static str {
    env!("LEXI_MORL_CODE_HASH")
}

impl RunManifest {
    pub fn new(mode: TrainMode, config: FileConfig, map: String) -> RunManifest {
        let seed = config.train.seed;
        RunManifest {
            mode,
            config,
            seed,
            map,
            code_version: code_version().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest::new(TrainMode::Morl, FileConfig::default(), "train".into());
        let text = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.seed, m.seed);
        assert_eq!(back.code_version, m.code_version);
        assert_eq!(back.config, m.config);
    }
}
