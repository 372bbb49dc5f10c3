//! Simulator invariants under random policies, plus trace-replay metric
//! equivalence against an independent test-side accumulator.

use lexi_morl_core::envsim::{DoneReason, Env, EnvConfig, MapSpec, StepOutcome};
use lexi_morl_core::eval::{self, metrics_from_trace, EpisodeMetrics, Policy, TraceStep};
use lexi_morl_core::observe::GridSpec;
use lexi_morl_core::rewards::{reward_vector, RewardConfig, SpeedMode};
use lexi_morl_core::Action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_step_invariants(env: &Env, cfg: &EnvConfig, out: &StepOutcome, v_before: f64, action: Action) {
    // speed clamp and exact kinematics away from the clamps
    let v = env.ego().speed;
    assert!((0.0..=cfg.v_hard_cap).contains(&v), "speed {v} outside [0, cap]");
    let raw = v_before + action.acceleration() * cfg.dt;
    if raw >= 0.0 && raw <= cfg.v_hard_cap {
        assert!((v - raw).abs() < 1e-12, "kinematics drifted: {v} vs {raw}");
    }
    // population cap within the vicinity, despawn radius respected
    let ego = env.ego().position;
    assert!(env.pedestrians().len() <= cfg.max_pedestrians);
    let mut in_vicinity = 0usize;
    for p in env.pedestrians() {
        let d = p.position.dist(ego);
        assert!(d <= cfg.despawn_radius + 1e-9, "pedestrian survived beyond despawn: {d}");
        if d <= cfg.vicinity_radius {
            in_vicinity += 1;
        }
    }
    assert!(in_vicinity <= cfg.max_pedestrians);
    // outcome consistency
    assert_eq!(out.done, out.reason.is_some());
    if out.reason == Some(DoneReason::Collision) {
        assert!(matches!(out.event, lexi_morl_core::rewards::SafetyEvent::Collision));
    }
}

/// Independent per-episode metric accumulator used as the replay oracle.
#[derive(Default)]
struct TestMetrics {
    steps: usize,
    distance: f64,
    ix_steps: usize,
    violated: bool,
    stops: usize,
    brake_run: bool,
    brake_v: f64,
    closest: Vec<f64>,
}

impl TestMetrics {
    fn push(&mut self, action: Action, v: f64, out: &StepOutcome, v_ref: f64) {
        self.steps += 1;
        self.distance += out.info.distance;
        if out.info.in_intersection {
            self.ix_steps += 1;
        }
        if v > v_ref {
            self.violated = true;
        }
        if action == Action::Brake {
            self.brake_run = true;
            self.brake_v = v;
        } else {
            if self.brake_run && self.brake_v == 0.0 {
                self.stops += 1;
            }
            self.brake_run = false;
        }
        if let Some(d) = out.info.nearest_front_crossing {
            if d < 2.0 {
                self.closest.push(d);
            }
        }
    }

    fn finish(mut self, reason: DoneReason, dt: f64) -> EpisodeMetrics {
        if self.brake_run && self.brake_v == 0.0 {
            self.stops += 1;
        }
        EpisodeMetrics {
            collision_free: reason != DoneReason::Collision,
            success: reason == DoneReason::Goal,
            distance_m: self.distance,
            steps: self.steps,
            avg_speed_mps: if self.steps > 0 {
                self.distance / (self.steps as f64 * dt)
            } else {
                0.0
            },
            speed_violated: self.violated,
            crossing_duration_pct: if self.steps > 0 {
                100.0 * self.ix_steps as f64 / self.steps as f64
            } else {
                0.0
            },
            stops: self.stops,
            closest_ped_distances: self.closest,
        }
    }
}

/// Drive random-action episodes, checking invariants each step and replaying
/// metrics from the collected trace afterwards.
fn run_random_invariant_steps(total_steps: usize, master_seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let maps = ["train", "heldout1", "heldout2"];
    let mut steps_done = 0usize;
    let mut episodes = 0usize;
    while steps_done < total_steps {
        let map = MapSpec::by_name(maps[episodes % maps.len()]).unwrap();
        let cfg = EnvConfig { step_cap: 600, ..EnvConfig::default() };
        let mut env = Env::reset(cfg.clone(), map, rng.gen()).unwrap();
        let mut oracle = TestMetrics::default();
        let mut trace: Vec<TraceStep> = Vec::new();
        let mut step = 0usize;
        while !env.is_done() {
            let action = Action::from_index(rng.gen_range(0..Action::COUNT)).unwrap();
            let v_before = env.ego().speed;
            let out = env.step(action).unwrap();
            let v = env.ego().speed;
            check_step_invariants(&env, &cfg, &out, v_before, action);
            oracle.push(action, v, &out, cfg.v_ref);
            let reward = reward_vector(&out.event, v, cfg.v_ref, &RewardConfig::default()).unwrap();
            trace.push(TraceStep {
                step,
                action,
                q_rows: Vec::new(),
                selection: None,
                reward,
                v,
                event: out.event,
                done: out.done,
                reason: out.reason,
                distance: out.info.distance,
                in_intersection: out.info.in_intersection,
                nearest_front_crossing: out.info.nearest_front_crossing,
                grid: None,
            });
            step += 1;
            steps_done += 1;
        }
        let want = oracle.finish(env.done_reason().unwrap(), cfg.dt);
        let got = metrics_from_trace(&trace, cfg.dt, cfg.v_ref).unwrap();
        assert_eq!(got, want, "trace replay diverged on episode {episodes}");
        episodes += 1;
    }
}

#[test]
fn random_policy_invariants_hold() {
    run_random_invariant_steps(100_000, 0xE27);
}

#[test]
fn scripted_episode_online_metrics_match_trace_replay() {
    for (policy, seed) in [
        (Policy::Scripted(Action::Brake), 3u64),
        (Policy::Scripted(Action::Accelerate), 4),
        (Policy::Scripted(Action::Maintain), 5),
    ] {
        let cfg = EnvConfig { step_cap: 400, ..EnvConfig::default() };
        let mut env = Env::reset(cfg.clone(), MapSpec::training(), seed).unwrap();
        let (online, trace) = eval::run_episode(
            &policy,
            &mut env,
            &GridSpec::desk(),
            SpeedMode::Literal,
            true,
            false,
        )
        .unwrap();
        let replayed = metrics_from_trace(&trace, cfg.dt, cfg.v_ref).unwrap();
        assert_eq!(online, replayed);
    }
}

#[test]
fn always_brake_never_collides_and_never_moves() {
    // pedestrians walk around a stationary vehicle; collisions require ego
    // motion
    for seed in 0..10u64 {
        let cfg = EnvConfig { step_cap: 500, ..EnvConfig::default() };
        let mut env = Env::reset(cfg.clone(), MapSpec::training(), seed).unwrap();
        let policy = Policy::Scripted(Action::Brake);
        let (m, _) = eval::run_episode(
            &policy,
            &mut env,
            &GridSpec::desk(),
            SpeedMode::Literal,
            false,
            false,
        )
        .unwrap();
        assert!(m.collision_free, "seed {seed}: braking ego was hit");
        assert!(!m.success);
        assert_eq!(m.distance_m, 0.0);
        assert_eq!(m.avg_speed_mps, 0.0);
    }
}
