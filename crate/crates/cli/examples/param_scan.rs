// temporary: sweep gamma × tau_safety on a mid-size grid, desk-like density
use lexi_morl_core::envsim::{Env, EnvConfig, MapSpec};
use lexi_morl_core::eval::{run_episode, Policy};
use lexi_morl_core::observe::GridSpec;
use lexi_morl_core::rewards::{PenaltyShape, SafetyParams, SpeedMode};
use lexi_morl_core::select::ThresholdMode;
use lexi_morl_core::train::{train_morl, EpsilonSchedule, TrainConfig};
use std::time::Instant;

fn main() {
    let grid = GridSpec::new(24, 14, 0.5).unwrap(); // 9 m forward view
    let env_cfg = EnvConfig {
        step_cap: 1200,
        safety: SafetyParams {
            collision_penalty: -20.0,
            min_safety_distance: 3.5,
            shape: PenaltyShape::ProximityIncreasing,
            ..SafetyParams::default()
        },
        ..EnvConfig::default()
    };
    for gamma in [0.9, 0.95] {
        for tau in [0.9f64, 0.95, 0.97] {
            let t = Instant::now();
            let cfg = TrainConfig {
                total_steps: 16_000,
                gamma,
                warmup: 500,
                train_every: 2,
                eps_safety: EpsilonSchedule::new(0.9, 0.3, 13_000).unwrap(),
                eps_speed: EpsilonSchedule::new(0.8, 0.1, 13_000).unwrap(),
                checkpoint_every: 16_000,
                thresholds: [tau, 0.95],
                threshold_mode: ThresholdMode::Slack,
                seed: 1,
                ..TrainConfig::desk()
            };
            let agents = train_morl(&cfg, &env_cfg, SpeedMode::Corrected, &grid, &MapSpec::training(), &mut |_| {}).unwrap();
            let policy = Policy::Morl(agents);
            let (mut cf, mut dist, mut succ, mut steps) = (0, 0.0, 0, 0usize);
            let n = 24;
            for seed in 0..n as u64 {
                let mut env = Env::reset(env_cfg.clone(), MapSpec::training(), 50_000 + seed).unwrap();
                let (m, _) = run_episode(&policy, &mut env, &grid, SpeedMode::Corrected, false, false).unwrap();
                if m.collision_free { cf += 1; }
                if m.success { succ += 1; }
                dist += m.distance_m;
                steps += m.steps;
            }
            println!(
                "gamma={gamma} tau={tau}: collision-free {cf}/{n}, success {succ}/{n}, mean dist {:.1} m, mean steps {:.0}, [{:?}]",
                dist / n as f64,
                steps as f64 / n as f64,
                t.elapsed()
            );
        }
    }
}
