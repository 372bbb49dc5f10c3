//! Training orchestration: the thresholded-lexicographic agent (two DQNs with
//! per-objective replay and exploration) and the single-objective baseline.
//!
//! The loop is pure apart from the caller-supplied event sink, which receives
//! per-step records, per-episode summaries and checkpoint snapshots; file IO
//! lives in the companion crate.

use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envsim::{DoneReason, Env, EnvConfig, MapSpec};
use crate::observe::{encode_ego, encode_grid, GridSpec};
use crate::qfunc::{
    sync_target, train_step, CnnQ, LossKind, MlpQ, ParamNet, QFunction, ReplayBuffer, RmsProp,
    TrainBatch, TrainScratch, Transition,
};
use crate::rewards::{reward_vector, scalarize, RewardConfig, SafetyEvent, SpeedMode};
use crate::select::{tlo_select, ExploreFlags, ObjectiveChain, QSnapshot, ThresholdMode};
use crate::{Action, Error, Result};

pub const REPLAY_CAPACITY: usize = 10_000;

/// Linear ε decay clamped at its end value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: usize,
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, decay_steps: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start < end {
            return Err(Error::config(format_args!(
                "epsilon schedule requires 1 >= start >= end >= 0, got {start}..{end}"
            )));
        }
        if decay_steps == 0 {
            return Err(Error::config("epsilon decay steps must be positive"));
        }
        Ok(EpsilonSchedule { start, end, decay_steps })
    }

    pub fn value(&self, step: usize) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let t = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Morl,
    Sorl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub total_steps: usize,
    pub gamma: f64,
    pub batch_size: usize,
    pub target_sync_every: usize,
    /// Transitions required in a replay buffer before updates begin.
    pub warmup: usize,
    /// Run one update per network every this many environment steps.
    pub train_every: usize,
    pub lr_safety: f64,
    pub lr_speed: f64,
    pub eps_safety: EpsilonSchedule,
    pub eps_speed: EpsilonSchedule,
    /// Percentage thresholds [τ_safety, τ_speed].
    pub thresholds: [f64; 2],
    pub threshold_mode: ThresholdMode,
    pub loss: LossKind,
    pub checkpoint_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::desk()
    }
}

impl TrainConfig {
    /// Paper-scale settings.
    pub fn paper() -> TrainConfig {
        TrainConfig {
            total_steps: 500_000,
            gamma: 0.99,
            batch_size: 32,
            target_sync_every: 1_000,
            warmup: 1_000,
            train_every: 1,
            lr_safety: 0.00025,
            lr_speed: 0.0025,
            eps_safety: EpsilonSchedule { start: 0.9, end: 0.3, decay_steps: 400_000 },
            eps_speed: EpsilonSchedule { start: 0.8, end: 0.1, decay_steps: 400_000 },
            thresholds: [0.95, 0.95],
            threshold_mode: ThresholdMode::Literal,
            loss: LossKind::Mse,
            checkpoint_every: 50_000,
            seed: 1,
        }
    }

    /// Desk-scale settings: one tenth of the paper's step counts, and a
    /// training cadence of one update per four environment steps so a full
    /// run fits a desktop CPU budget.
    pub fn desk() -> TrainConfig {
        TrainConfig {
            total_steps: 50_000,
            eps_safety: EpsilonSchedule { start: 0.9, end: 0.3, decay_steps: 40_000 },
            eps_speed: EpsilonSchedule { start: 0.8, end: 0.1, decay_steps: 40_000 },
            train_every: 4,
            checkpoint_every: 10_000,
            ..TrainConfig::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 || self.batch_size == 0 {
            return Err(Error::config("steps and batch size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must lie in [0, 1]"));
        }
        if self.target_sync_every == 0 || self.train_every == 0 || self.checkpoint_every == 0 {
            return Err(Error::config("cadences must be positive"));
        }
        if self.warmup == 0 {
            return Err(Error::config("warmup must be positive"));
        }
        if !(self.lr_safety > 0.0 && self.lr_speed > 0.0) {
            return Err(Error::config("learning rates must be positive"));
        }
        EpsilonSchedule::new(self.eps_safety.start, self.eps_safety.end, self.eps_safety.decay_steps)?;
        EpsilonSchedule::new(self.eps_speed.start, self.eps_speed.end, self.eps_speed.decay_steps)?;
        for t in self.thresholds {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::config("thresholds must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    pub fn chain(&self) -> Result<ObjectiveChain> {
        Ok(ObjectiveChain::safety_speed(self.thresholds[0], self.thresholds[1])?
            .with_mode(self.threshold_mode))
    }
}

/// Select at most one objective for exploration: pick an objective uniformly,
/// then flag it with its schedule's current probability.
pub fn pick_exploration<R: Rng + ?Sized>(
    step: usize,
    schedules: &[EpsilonSchedule],
    rng: &mut R,
) -> ExploreFlags {
    let n = schedules.len();
    let i = rng.gen_range(0..n);
    let eps = schedules[i].value(step);
    if rng.gen_bool(eps) {
        ExploreFlags::one(n, i).expect("index in range")
    } else {
        ExploreFlags::none(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub episode: usize,
    pub action: Action,
    pub explored: Option<usize>,
    pub eps: Vec<f64>,
    pub reward: Vec<f64>,
    pub loss: Option<Vec<f64>>,
    pub v: f64,
    pub event: SafetyEvent,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    pub returns: Vec<f64>,
    pub outcome: DoneReason,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArchDescriptor {
    Cnn { grid_h: usize, grid_w: usize, extra_inputs: usize },
    Mlp { input_len: usize },
}

pub struct NetState<'a> {
    pub name: &'static str,
    pub arch: ArchDescriptor,
    pub params: &'a [f64],
    pub opt_sq: &'a [f64],
}

pub struct CheckpointView<'a> {
    pub step: usize,
    pub mode: TrainMode,
    pub nets: Vec<NetState<'a>>,
}

pub enum TrainEvent<'a> {
    Step(&'a StepRecord),
    Episode(&'a EpisodeRecord),
    Checkpoint(CheckpointView<'a>),
}

/// The trained thresholded-lexicographic agent.
#[derive(Debug, Clone)]
pub struct MorlAgents {
    pub safety: CnnQ,
    pub speed: MlpQ,
    pub chain: ObjectiveChain,
}

/// The trained single-objective baseline.
#[derive(Debug, Clone)]
pub struct SorlAgent {
    pub net: CnnQ,
}

fn to_f32_rc(v: &[f64]) -> Rc<[f32]> {
    v.iter().map(|&x| x as f32).collect()
}

fn fill_f64(dst: &mut Vec<f64>, src: &[f32]) {
    dst.extend(src.iter().map(|&x| x as f64));
}

struct NetTrainer<N: ParamNet> {
    online: N,
    target: N,
    opt: RmsProp,
    scratch: TrainScratch<N>,
    replay: ReplayBuffer<Rc<[f32]>>,
    // batch assembly buffers
    obs: Vec<f64>,
    next_obs: Vec<f64>,
    actions: Vec<Action>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
}

impl<N: ParamNet + Clone> NetTrainer<N> {
    fn new(online: N, lr: f64) -> Result<Self> {
        let target = online.clone();
        let opt = RmsProp::new(lr, online.num_params())?;
        let scratch = TrainScratch::new(&online);
        Ok(NetTrainer {
            target,
            opt,
            scratch,
            replay: ReplayBuffer::new(REPLAY_CAPACITY)?,
            obs: Vec::new(),
            next_obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            online,
        })
    }

    fn push(&mut self, obs: Rc<[f32]>, action: Action, reward: f64, next_obs: Rc<[f32]>, done: bool) {
        self.replay.push(Transition { obs, action, reward, next_obs, done });
    }

    fn update<R: Rng + ?Sized>(
        &mut self,
        batch_size: usize,
        gamma: f64,
        loss_kind: LossKind,
        rng: &mut R,
    ) -> Result<f64> {
        let idx = self.replay.sample_indices(rng, batch_size)?;
        self.obs.clear();
        self.next_obs.clear();
        self.actions.clear();
        self.rewards.clear();
        self.dones.clear();
        for &i in &idx {
            let t = self.replay.get(i);
            fill_f64(&mut self.obs, &t.obs);
            fill_f64(&mut self.next_obs, &t.next_obs);
            self.actions.push(t.action);
            self.rewards.push(t.reward);
            self.dones.push(t.done);
        }
        let batch = TrainBatch {
            obs: &self.obs,
            actions: &self.actions,
            rewards: &self.rewards,
            next_obs: &self.next_obs,
            dones: &self.dones,
            n: batch_size,
        };
        train_step(
            &mut self.online,
            &self.target,
            &batch,
            gamma,
            loss_kind,
            &mut self.opt,
            &mut self.scratch,
        )
    }

    fn sync(&mut self) -> Result<()> {
        sync_target(&self.online, &mut self.target)
    }
}

/// Train the two-objective agent. Events stream to `sink`; the final networks
/// are returned.
pub fn train_morl(
    cfg: &TrainConfig,
    env_cfg: &EnvConfig,
    speed_mode: SpeedMode,
    grid: &GridSpec,
    map: &MapSpec,
    sink: &mut dyn FnMut(TrainEvent<'_>),
) -> Result<MorlAgents> {
    // the env's safety params both classify events and price them
    let reward_cfg = &RewardConfig { safety: env_cfg.safety, speed_mode };
    cfg.validate()?;
    env_cfg.validate()?;
    let chain = cfg.chain()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let safety_net = CnnQ::new(grid.height, grid.width, 0, rng.next_u64())?;
    let speed_net = MlpQ::new(1, rng.next_u64())?;
    let mut safety = NetTrainer::new(safety_net, cfg.lr_safety)?;
    let mut speed = NetTrainer::new(speed_net, cfg.lr_speed)?;
    let mut select_cache = safety.online.new_cache();
    let mut q_buf: Vec<f64> = Vec::new();

    let mut env = Env::reset(env_cfg.clone(), map.clone(), rng.next_u64())?;
    let mut grid_f64: Vec<f64> = encode_grid(&env, grid).data;
    let mut grid_rc: Rc<[f32]> = to_f32_rc(&grid_f64);
    let mut ego_v = encode_ego(&env).speed;

    let mut episode = 0usize;
    let mut ep_steps = 0usize;
    let mut ep_returns = [0.0f64; 2];
    let mut ep_distance = 0.0f64;

    let schedules = [cfg.eps_safety, cfg.eps_speed];

    for step in 0..cfg.total_steps {
        // per-objective Q rows on the per-objective states
        safety.online.forward_batch(&grid_f64, 1, &mut q_buf, &mut select_cache);
        let q_safety = [q_buf[0], q_buf[1], q_buf[2], q_buf[3]];
        let q_speed = speed.online.q_values(&[ego_v])?;
        let snapshot = QSnapshot::new(vec![q_safety.to_vec(), q_speed.to_vec()])?;
        let flags = pick_exploration(step, &schedules, &mut rng);
        let (action, trace) = tlo_select(&snapshot, &chain, &flags, &mut rng)?;

        let out = env.step(action)?;
        let v_after = env.ego().speed;
        let reward = reward_vector(&out.event, v_after, env_cfg.v_ref, reward_cfg)?;

        let next_grid_f64 = encode_grid(&env, grid).data;
        let next_grid_rc: Rc<[f32]> = to_f32_rc(&next_grid_f64);
        let next_ego_v = encode_ego(&env).speed;
        let ego_rc: Rc<[f32]> = Rc::from([ego_v as f32]);
        let next_ego_rc: Rc<[f32]> = Rc::from([next_ego_v as f32]);

        safety.push(grid_rc.clone(), action, reward.safety, next_grid_rc.clone(), out.done);
        speed.push(ego_rc, action, reward.speed, next_ego_rc, out.done);

        let warm = safety.replay.len() >= cfg.warmup && speed.replay.len() >= cfg.warmup;
        let loss = if warm && (step + 1) % cfg.train_every == 0 {
            let ls = safety.update(cfg.batch_size, cfg.gamma, cfg.loss, &mut rng)?;
            let lp = speed.update(cfg.batch_size, cfg.gamma, cfg.loss, &mut rng)?;
            Some(vec![ls, lp])
        } else {
            None
        };
        if (step + 1) % cfg.target_sync_every == 0 {
            safety.sync()?;
            speed.sync()?;
        }

        ep_steps += 1;
        ep_returns[0] += reward.safety;
        ep_returns[1] += reward.speed;
        ep_distance += out.info.distance;

        let record = StepRecord {
            step,
            episode,
            action,
            explored: trace.explored,
            eps: vec![cfg.eps_safety.value(step), cfg.eps_speed.value(step)],
            reward: vec![reward.safety, reward.speed],
            loss,
            v: v_after,
            event: out.event,
            done: out.done,
        };
        sink(TrainEvent::Step(&record));

        if (step + 1) % cfg.checkpoint_every == 0 || step + 1 == cfg.total_steps {
            sink(TrainEvent::Checkpoint(morl_checkpoint(step + 1, &safety, &speed, grid)));
        }

        if out.done {
            let rec = EpisodeRecord {
                episode,
                steps: ep_steps,
                returns: ep_returns.to_vec(),
                outcome: out.reason.expect("done implies reason"),
                distance: ep_distance,
            };
            sink(TrainEvent::Episode(&rec));
            episode += 1;
            ep_steps = 0;
            ep_returns = [0.0; 2];
            ep_distance = 0.0;
            env = Env::reset(env_cfg.clone(), map.clone(), rng.next_u64())?;
            grid_f64 = encode_grid(&env, grid).data;
            grid_rc = to_f32_rc(&grid_f64);
            ego_v = encode_ego(&env).speed;
        } else {
            grid_f64 = next_grid_f64;
            grid_rc = next_grid_rc;
            ego_v = next_ego_v;
        }
    }

    Ok(MorlAgents { safety: safety.online, speed: speed.online, chain })
}

fn morl_checkpoint<'a>(
    step: usize,
    safety: &'a NetTrainer<CnnQ>,
    speed: &'a NetTrainer<MlpQ>,
    grid: &GridSpec,
) -> CheckpointView<'a> {
    CheckpointView {
        step,
        mode: TrainMode::Morl,
        nets: vec![
            NetState {
                name: "safety",
                arch: ArchDescriptor::Cnn {
                    grid_h: grid.height,
                    grid_w: grid.width,
                    extra_inputs: 0,
                },
                params: safety.online.params(),
                opt_sq: safety.opt.sq_avg(),
            },
            NetState {
                name: "speed",
                arch: ArchDescriptor::Mlp { input_len: 1 },
                params: speed.online.params(),
                opt_sq: speed.opt.sq_avg(),
            },
        ],
    }
}

/// Train the single-objective baseline: one network over the grid observation
/// with the ego speed concatenated at the first fully connected layer,
/// trained on the summed reward with ε-greedy selection.
pub fn train_sorl(
    cfg: &TrainConfig,
    env_cfg: &EnvConfig,
    speed_mode: SpeedMode,
    grid: &GridSpec,
    map: &MapSpec,
    sink: &mut dyn FnMut(TrainEvent<'_>),
) -> Result<SorlAgent> {
    let reward_cfg = &RewardConfig { safety: env_cfg.safety, speed_mode };
    cfg.validate()?;
    env_cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let net = CnnQ::new(grid.height, grid.width, 1, rng.next_u64())?;
    let mut trainer = NetTrainer::new(net, cfg.lr_safety)?;
    let mut select_cache = trainer.online.new_cache();
    let mut q_buf: Vec<f64> = Vec::new();

    let mut env = Env::reset(env_cfg.clone(), map.clone(), rng.next_u64())?;
    let mut obs_f64 = sorl_obs(&env, grid);
    let mut obs_rc: Rc<[f32]> = to_f32_rc(&obs_f64);

    let mut episode = 0usize;
    let mut ep_steps = 0usize;
    let mut ep_return = 0.0f64;
    let mut ep_distance = 0.0f64;

    for step in 0..cfg.total_steps {
        let eps = cfg.eps_safety.value(step);
        let explored = rng.gen_bool(eps);
        let action = if explored {
            Action::from_index(rng.gen_range(0..Action::COUNT)).expect("in range")
        } else {
            trainer.online.forward_batch(&obs_f64, 1, &mut q_buf, &mut select_cache);
            let mut best = 0;
            for a in 1..Action::COUNT {
                if q_buf[a] > q_buf[best] {
                    best = a;
                }
            }
            Action::from_index(best).expect("in range")
        };

        let out = env.step(action)?;
        let v_after = env.ego().speed;
        let reward = scalarize(reward_vector(&out.event, v_after, env_cfg.v_ref, reward_cfg)?);

        let next_obs_f64 = sorl_obs(&env, grid);
        let next_obs_rc: Rc<[f32]> = to_f32_rc(&next_obs_f64);
        trainer.push(obs_rc.clone(), action, reward, next_obs_rc.clone(), out.done);

        let warm = trainer.replay.len() >= cfg.warmup;
        let loss = if warm && (step + 1) % cfg.train_every == 0 {
            Some(vec![trainer.update(cfg.batch_size, cfg.gamma, cfg.loss, &mut rng)?])
        } else {
            None
        };
        if (step + 1) % cfg.target_sync_every == 0 {
            trainer.sync()?;
        }

        ep_steps += 1;
        ep_return += reward;
        ep_distance += out.info.distance;

        let record = StepRecord {
            step,
            episode,
            action,
            explored: if explored { Some(0) } else { None },
            eps: vec![eps],
            reward: vec![reward],
            loss,
            v: v_after,
            event: out.event,
            done: out.done,
        };
        sink(TrainEvent::Step(&record));

        if (step + 1) % cfg.checkpoint_every == 0 || step + 1 == cfg.total_steps {
            sink(TrainEvent::Checkpoint(CheckpointView {
                step: step + 1,
                mode: TrainMode::Sorl,
                nets: vec![NetState {
                    name: "sorl",
                    arch: ArchDescriptor::Cnn {
                        grid_h: grid.height,
                        grid_w: grid.width,
                        extra_inputs: 1,
                    },
                    params: trainer.online.params(),
                    opt_sq: trainer.opt.sq_avg(),
                }],
            }));
        }

        if out.done {
            let rec = EpisodeRecord {
                episode,
                steps: ep_steps,
                returns: vec![ep_return],
                outcome: out.reason.expect("done implies reason"),
                distance: ep_distance,
            };
            sink(TrainEvent::Episode(&rec));
            episode += 1;
            ep_steps = 0;
            ep_return = 0.0;
            ep_distance = 0.0;
            env = Env::reset(env_cfg.clone(), map.clone(), rng.next_u64())?;
            obs_f64 = sorl_obs(&env, grid);
            obs_rc = to_f32_rc(&obs_f64);
        } else {
            obs_f64 = next_obs_f64;
            obs_rc = next_obs_rc;
        }
    }

    Ok(SorlAgent { net: trainer.online })
}

fn sorl_obs(env: &Env, grid: &GridSpec) -> Vec<f64> {
    let mut obs = encode_grid(env, grid).data;
    obs.push(encode_ego(env).speed);
    obs
}

/// Names a run's networks for checkpoint containers.
pub fn arch_name(arch: &ArchDescriptor) -> String {
    match arch {
        ArchDescriptor::Cnn { grid_h, grid_w, extra_inputs } => {
            alloc::format!("cnn{grid_h}x{grid_w}+{extra_inputs}")
        }
        ArchDescriptor::Mlp { input_len } => alloc::format!("mlp{input_len}"),
    }
}
