// temporary diagnostic: inspect the trained corridor policy's decisions
use lexi_morl_core::envsim::{Env, EnvConfig, MapSpec};
use lexi_morl_core::eval::{run_episode, Policy};
use lexi_morl_core::observe::{encode_ego, encode_grid, GridSpec};
use lexi_morl_core::qfunc::QFunction;
use lexi_morl_core::rewards::{PenaltyShape, SafetyParams, SpeedMode};
use lexi_morl_core::select::ThresholdMode;
use lexi_morl_core::train::{train_morl, EpsilonSchedule, TrainConfig};

fn main() {
    let grid = GridSpec::new(20, 14, 0.5).unwrap();
    let env_cfg = EnvConfig {
        max_pedestrians: 12,
        crossing_factor: 1.0,
        step_cap: 500,
        safety: SafetyParams {
            collision_penalty: -20.0,
            min_safety_distance: 3.5,
            shape: PenaltyShape::ProximityIncreasing,
            ..SafetyParams::default()
        },
        ..EnvConfig::default()
    };

    let cfg = TrainConfig {
        total_steps: 20_000,
        gamma: 0.9,
        warmup: 500,
        train_every: 2,
        eps_safety: EpsilonSchedule::new(0.9, 0.2, 15_000).unwrap(),
        eps_speed: EpsilonSchedule::new(0.8, 0.05, 15_000).unwrap(),
        checkpoint_every: 20_000,
        thresholds: [0.97, 0.95],
        threshold_mode: ThresholdMode::Slack,
        seed: 5,
        ..TrainConfig::desk()
    };
    let mut collision_events = 0usize;
    let mut steps_total = 0usize;
    let agents = train_morl(&cfg, &env_cfg, SpeedMode::Corrected, &grid, &MapSpec::training(), &mut |ev| {
        if let lexi_morl_core::train::TrainEvent::Step(s) = ev {
            steps_total += 1;
            if matches!(s.event, lexi_morl_core::rewards::SafetyEvent::Collision) {
                collision_events += 1;
            }
        }
    })
    .unwrap();
    println!("training: {collision_events} collisions in {steps_total} steps");

    // eval one episode verbosely
    let mut env = Env::reset(env_cfg.clone(), MapSpec::training(), 10_000).unwrap();
    let mut step = 0;
    while !env.is_done() && step < 220 {
        let g = encode_grid(&env, &grid);
        let e = encode_ego(&env);
        let qs = agents.safety.q_values(g.flat()).unwrap();
        let qp = agents.speed.q_values(&e.flat()).unwrap();
        let policy = Policy::Morl(agents.clone());
        let (a, _, trace) = policy.select(&g, &e).unwrap();
        let near = env.nearest_front_crossing_pedestrian();
        let out = env.step(a).unwrap();
        let verbose = step % 4 == 0;
        if verbose { println!(
            "#{step:<3} v={:4.1} near={:>5} qs=[{:+.2} {:+.2} {:+.2} {:+.2}] qp=[{:+.2} {:+.2} {:+.2} {:+.2}] A1={:?} a={:?} ev={:?}",
            env.ego().speed,
            near.map(|d| format!("{d:.1}")).unwrap_or("-".into()),
            qs[0], qs[1], qs[2], qs[3],
            qp[0], qp[1], qp[2], qp[3],
            trace.as_ref().unwrap().sets[1],
            a,
            out.event,
        ); }
        step += 1;
    }

    // count collisions over 30 eval episodes
    let policy = Policy::Morl(agents.clone());
    let mut collisions = 0;
    for seed in 0..30u64 {
        let mut env = Env::reset(env_cfg.clone(), MapSpec::training(), 10_000 + seed).unwrap();
        let (m, _) =
            run_episode(&policy, &mut env, &grid, SpeedMode::Corrected, false, false).unwrap();
        if !m.collision_free {
            collisions += 1;
        }
    }
    println!("eval collisions: {collisions}/30");
}
