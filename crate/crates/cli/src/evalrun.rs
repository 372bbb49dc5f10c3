//! Parallel evaluation driver: episodes are independent and run across
//! threads, capped by the LEXI_MORL_THREADS environment variable.

use std::path::Path;
use std::sync::Mutex;

use anyhow::Result;
use lexi_morl_core::envsim::{Env, EnvConfig, MapSpec};
use lexi_morl_core::eval::{aggregate, run_episode, AggregateReport, EpisodeMetrics, Policy};
use lexi_morl_core::observe::GridSpec;
use lexi_morl_core::rewards::SpeedMode;

use crate::traces;

pub const THREADS_ENV: &str = "LEXI_MORL_THREADS";

pub fn eval_threads(episodes: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    cap.min(episodes.max(1))
}

/// Run seeded greedy episodes (seed, seed+1, ...) in parallel and aggregate.
/// Aggregation is order-insensitive, so thread scheduling cannot change the
/// report.
pub fn run_eval_parallel(
    policy: &Policy,
    env_cfg: &EnvConfig,
    map: &MapSpec,
    grid: &GridSpec,
    speed_mode: SpeedMode,
    episodes: usize,
    seed: u64,
    trace_dir: Option<&Path>,
    trace_obs: bool,
) -> Result<(AggregateReport, Vec<EpisodeMetrics>)> {
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let threads = eval_threads(episodes);
    let next = Mutex::new(0usize);
    let results: Mutex<Vec<(usize, EpisodeMetrics)>> = Mutex::new(Vec::with_capacity(episodes));
    let failure: Mutex<Option<anyhow::Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = {
                    let mut guard = next.lock().unwrap();
                    if *guard >= episodes {
                        return;
                    }
                    let i = *guard;
                    *guard += 1;
                    i
                };
                let run = || -> Result<(usize, EpisodeMetrics)> {
                    let mut env =
                        Env::reset(env_cfg.clone(), map.clone(), seed.wrapping_add(i as u64))?;
                    let want_trace = trace_dir.is_some();
                    let (metrics, trace) =
                        run_episode(policy, &mut env, grid, speed_mode, want_trace, trace_obs)?;
                    if let Some(dir) = trace_dir {
                        traces::write_trace(&dir.join(format!("ep_{i:04}.jsonl")), &trace)?;
                    }
                    Ok((i, metrics))
                };
                match run() {
                    Ok(entry) => results.lock().unwrap().push(entry),
                    Err(e) => {
                        *failure.lock().unwrap() = Some(e);
                        return;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut collected = results.into_inner().unwrap();
    collected.sort_by_key(|(i, _)| *i);
    let metrics: Vec<EpisodeMetrics> = collected.into_iter().map(|(_, m)| m).collect();
    Ok((aggregate(policy.name(), &map.name, &metrics), metrics))
}
