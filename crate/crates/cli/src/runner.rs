//! Drives a training run and materializes its artifacts: manifest, JSON-lines
//! training log and checkpoint files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lexi_morl_core::envsim::MapSpec;
use lexi_morl_core::train::{train_morl, train_sorl, TrainEvent, TrainMode};

use crate::config::FileConfig;
use crate::manifest::RunManifest;
use crate::ckpt;

pub struct RunPaths {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub log: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub final_checkpoint: PathBuf,
}

impl RunPaths {
    pub fn new(out_dir: &Path) -> RunPaths {
        RunPaths {
            out_dir: out_dir.to_path_buf(),
            manifest: out_dir.join("manifest.json"),
            log: out_dir.join("train_log.jsonl"),
            checkpoint_dir: out_dir.join("checkpoints"),
            final_checkpoint: out_dir.join("checkpoint_final.bin"),
        }
    }
}

/// Run training to completion and write all artifacts. On divergence the last
/// cadence checkpoint stays on disk and the error is reported.
pub fn run_training(
    mode: TrainMode,
    cfg: &FileConfig,
    map: &MapSpec,
    out_dir: &Path,
) -> Result<RunPaths> {
    let paths = RunPaths::new(out_dir);
    fs::create_dir_all(&paths.checkpoint_dir)
        .with_context(|| format!("cannot create {}", paths.checkpoint_dir.display()))?;

    RunManifest::new(mode, cfg.clone(), map.name.clone()).write(&paths.manifest)?;

    let log_file = fs::File::create(&paths.log)
        .with_context(|| format!("cannot create {}", paths.log.display()))?;
    let mut log = BufWriter::new(log_file);
    let speed_mode = cfg.reward.speed_mode;
    let chain = cfg.train.chain()?;

    let mut last_ckpt_bytes: Option<Vec<u8>> = None;
    let mut sink_err: Option<anyhow::Error> = None;
    {
        let checkpoint_dir = paths.checkpoint_dir.clone();
        let chain_for_ckpt = match mode {
            TrainMode::Morl => Some(chain.clone()),
            TrainMode::Sorl => None,
        };
        let mut sink = |ev: TrainEvent<'_>| {
            if sink_err.is_some() {
                return;
            }
            let result = (|| -> Result<()> {
                match ev {
                    TrainEvent::Step(s) => {
                        log.write_all(br#"{"type":"step","data":"#)?;
                        serde_json::to_writer(&mut log, s)?;
                        log.write_all(b"}\n")?;
                    }
                    TrainEvent::Episode(e) => {
                        log.write_all(br#"{"type":"episode","data":"#)?;
                        serde_json::to_writer(&mut log, e)?;
                        log.write_all(b"}\n")?;
                    }
                    TrainEvent::Checkpoint(view) => {
                        let bytes = ckpt::to_bytes(&view, chain_for_ckpt.as_ref())?;
                        let path = checkpoint_dir.join(format!("step_{:08}.bin", view.step));
                        fs::write(&path, &bytes)
                            .with_context(|| format!("cannot write {}", path.display()))?;
                        last_ckpt_bytes = Some(bytes);
                    }
                }
                Ok(())
            })();
            if let Err(e) = result {
                sink_err = Some(e);
            }
        };

        let train_result = match mode {
            TrainMode::Morl => {
                train_morl(&cfg.train, &cfg.env, speed_mode, &cfg.grid, map, &mut sink).map(|_| ())
            }
            TrainMode::Sorl => {
                train_sorl(&cfg.train, &cfg.env, speed_mode, &cfg.grid, map, &mut sink).map(|_| ())
            }
        };
        train_result.context("training aborted; the last cadence checkpoint is retained")?;
    }
    if let Some(e) = sink_err {
        return Err(e);
    }
    log.flush()?;

    let bytes = last_ckpt_bytes.context("training produced no checkpoint")?;
    fs::write(&paths.final_checkpoint, bytes)
        .with_context(|| format!("cannot write {}", paths.final_checkpoint.display()))?;
    Ok(paths)
}
