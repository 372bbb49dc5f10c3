//! Built-in verification suites: a brute-force selection oracle, reward hand
//! values, finite-difference gradient checks and double-DQN convergence on a
//! deterministic chain MDP against a value-iteration oracle.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use lexi_morl_core::observe::GRID_LAYERS;
use lexi_morl_core::qfunc::{
    grad_check, sync_target, train_step, CnnQ, LossKind, MlpQ, ParamNet, QFunction, ReplayBuffer,
    RmsProp, TrainBatch, TrainScratch, Transition,
};
use lexi_morl_core::rewards::{
    dynamic_range, near_collision_penalty, reward_vector, safety_reward, scalarize, speed_reward,
    PenaltyShape, RewardConfig, RewardVector, SafetyEvent, SafetyParams,
};
use lexi_morl_core::select::{
    tlo_select_with_cmp, BarCmp, ExploreFlags, ObjectiveChain, ObjectiveSpec, QSnapshot,
    ThresholdMode,
};
use lexi_morl_core::Action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn pass(name: &'static str, detail: String) -> SuiteResult {
        SuiteResult { name, passed: true, detail }
    }

    fn fail(name: &'static str, detail: String) -> SuiteResult {
        SuiteResult { name, passed: false, detail }
    }
}

/// Verification faults that can be injected to prove the suites detect them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the acceptability comparison from >= to >.
    TloStrictInequality,
}

/// Brute-force enumeration oracle for the percentage-threshold selection.
fn oracle_tlo(
    rows: &[Vec<f64>],
    taus: &[f64],
    mode: ThresholdMode,
) -> (Vec<BTreeSet<usize>>, usize) {
    let n_actions = rows[0].len();
    let mut sets: Vec<BTreeSet<usize>> = vec![(0..n_actions).collect()];
    for (row, &tau) in rows.iter().zip(taus) {
        let prev = sets.last().unwrap();
        let mut argmax = *prev.iter().next().unwrap();
        for &a in prev {
            if row[a] > row[argmax] {
                argmax = a;
            }
        }
        let bar = match mode {
            ThresholdMode::Literal => tau * row[argmax],
            ThresholdMode::Slack => row[argmax] - (1.0 - tau) * row[argmax].abs(),
        };
        let mut next: BTreeSet<usize> = prev.iter().copied().filter(|&a| row[a] >= bar).collect();
        next.insert(argmax);
        sets.push(next);
    }
    let last_row = rows.last().unwrap();
    let final_set = sets.last().unwrap();
    let mut greedy = *final_set.iter().next().unwrap();
    for &a in final_set {
        if last_row[a] > last_row[greedy] {
            greedy = a;
        }
    }
    (sets, greedy)
}

/// Selection vs the enumeration oracle over seeded random Q-tables.
pub fn suite_tlo_oracle(cases: usize, fault: Option<Fault>) -> SuiteResult {
    const NAME: &str = "tlo-oracle";
    let cmp = match fault {
        Some(Fault::TloStrictInequality) => BarCmp::Gt,
        None => BarCmp::Ge,
    };
    let taus_pool = [0.5, 0.8, 0.95, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(0x7107_5313);
    let start = Instant::now();
    let mut mismatches = 0usize;
    for case in 0..cases {
        let n_obj = rng.gen_range(1..=3);
        let taus: Vec<f64> =
            (0..n_obj).map(|_| taus_pool[rng.gen_range(0..taus_pool.len())]).collect();
        let mode = if rng.gen_bool(0.5) { ThresholdMode::Literal } else { ThresholdMode::Slack };
        let mut rows: Vec<Vec<f64>> = (0..n_obj)
            .map(|_| (0..Action::COUNT).map(|_| rng.gen_range(-10.0..10.0)).collect())
            .collect();
        // quantized values and exact ties exercise the >= boundary of the
        // acceptability bar, where the strict-inequality fault hides
        if case % 3 == 0 {
            for row in &mut rows {
                for v in row.iter_mut() {
                    *v = (*v * 2.0).round() / 2.0;
                }
            }
        }
        if case % 4 == 0 {
            for row in &mut rows {
                row[1] = row[0];
            }
        }
        let (oracle_sets, oracle_greedy) = oracle_tlo(&rows, &taus, mode);

        let chain = ObjectiveChain::new(
            taus.iter()
                .enumerate()
                .map(|(i, &tau)| ObjectiveSpec { name: format!("o{i}"), tau, clamp: None })
                .collect(),
        )
        .expect("valid chain")
        .with_mode(mode);
        let snapshot = QSnapshot::new(rows).expect("valid snapshot");
        let mut sel_rng = ChaCha8Rng::seed_from_u64(case as u64);
        let (action, trace) = match tlo_select_with_cmp(
            &snapshot,
            &chain,
            &ExploreFlags::none(n_obj),
            &mut sel_rng,
            cmp,
        ) {
            Ok(v) => v,
            Err(_) => {
                mismatches += 1;
                continue;
            }
        };
        let sets_match = trace.sets.len() == oracle_sets.len()
            && trace
                .sets
                .iter()
                .zip(&oracle_sets)
                .all(|(got, want)| got.iter().copied().collect::<BTreeSet<usize>>() == *want);
        if action.index() != oracle_greedy || !sets_match {
            mismatches += 1;
        }
    }
    let detail = format!("{mismatches} mismatches over {cases} cases in {:?}", start.elapsed());
    if mismatches == 0 {
        SuiteResult::pass(NAME, detail)
    } else {
        SuiteResult::fail(NAME, detail)
    }
}

/// Hand-computed reward values.
pub fn suite_rewards() -> SuiteResult {
    const NAME: &str = "rewards";
    let p = SafetyParams::default();
    let prox = SafetyParams { shape: PenaltyShape::ProximityIncreasing, ..p };
    let e_inv = 1.0 / std::f64::consts::E;
    let mut failures = String::new();
    let mut check = |label: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-9 {
            let _ = writeln!(failures, "{label}: got {got}, want {want}");
        }
    };

    check("d_r(8)", dynamic_range(8.0, &p).unwrap(), 6.4);
    check("d_r(0)", dynamic_range(0.0, &p).unwrap(), 2.0);
    check("d_r(4)", dynamic_range(4.0, &p).unwrap(), 2.0);
    check("r_nc(6.4,6.4)", near_collision_penalty(6.4, 6.4, &p).unwrap(), -1.0);
    check("r_nc(->0,6.4)", near_collision_penalty(1e-9, 6.4, &p).unwrap(), -e_inv);
    check("r_nc prox(6.4,6.4)", near_collision_penalty(6.4, 6.4, &prox).unwrap(), -e_inv);
    check("r_safety(collision)", safety_reward(&SafetyEvent::Collision, 8.0, &p).unwrap(), -4.0);
    check("r_safety(clear)", safety_reward(&SafetyEvent::Clear, 8.0, &p).unwrap(), 0.0);
    check(
        "r_safety(nc 6.4 @ 8)",
        safety_reward(&SafetyEvent::NearCollision { distance: 6.4 }, 8.0, &p).unwrap(),
        -1.0,
    );
    check("r_speed(8,8)", speed_reward(8.0, 8.0).unwrap(), 0.0);
    check("r_speed(0,8)", speed_reward(0.0, 8.0).unwrap(), -1.0);
    check("r_speed(4,8)", speed_reward(4.0, 8.0).unwrap(), 0.5);
    check("r_speed(9,8)", speed_reward(9.0, 8.0).unwrap(), -0.5);
    let cfg = RewardConfig::default();
    let rv = reward_vector(&SafetyEvent::Collision, 8.0, 8.0, &cfg).unwrap();
    check("vector collision safety", rv.safety, -4.0);
    check("vector collision speed", rv.speed, 0.0);
    let rv = reward_vector(&SafetyEvent::Clear, 0.0, 8.0, &cfg).unwrap();
    check("vector stopped safety", rv.safety, 0.0);
    check("vector stopped speed", rv.speed, -1.0);
    check("scalarize", scalarize(RewardVector { safety: -1.0, speed: 0.5 }), -0.5);

    if failures.is_empty() {
        SuiteResult::pass(NAME, "all hand values reproduce to 1e-9".into())
    } else {
        SuiteResult::fail(NAME, failures)
    }
}

pub fn grid_fixture_input<R: Rng>(net: &CnnQ, rng: &mut R) -> Vec<f64> {
    let grid_len = net.grid_h() * net.grid_w() * GRID_LAYERS;
    let mut input = Vec::with_capacity(net.input_len());
    for i in 0..grid_len {
        input.push(match i % GRID_LAYERS {
            0 => f64::from(rng.gen_bool(0.5) as u8),
            1 => rng.gen_range(-16.0..16.0),
            2 => rng.gen_range(-180.0..180.0),
            _ => rng.gen_range(0..4) as f64,
        });
    }
    for _ in grid_len..net.input_len() {
        input.push(rng.gen_range(0.0..15.0));
    }
    input
}

/// Analytic vs central finite-difference gradients for both architectures.
pub fn suite_gradcheck(fixtures: usize, tolerance: f64) -> SuiteResult {
    const NAME: &str = "gradcheck";
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6AD);
    let mut worst_cnn = 0.0f64;
    let mut worst_mlp = 0.0f64;
    for i in 0..fixtures as u64 {
        let mut cnn = CnnQ::new(6, 6, (i % 2) as usize, 1000 + i).expect("valid net");
        let input = grid_fixture_input(&cnn, &mut rng);
        let action = Action::from_index((i % 4) as usize).unwrap();
        let target = rng.gen_range(-5.0..5.0);
        match grad_check(&mut cnn, &input, action, target, 200, &mut rng) {
            Ok(err) => worst_cnn = worst_cnn.max(err),
            Err(e) => return SuiteResult::fail(NAME, format!("cnn fixture {i}: {e}")),
        }

        let mut mlp = MlpQ::new(1, 2000 + i).expect("valid net");
        let input = [rng.gen_range(0.0..15.0)];
        match grad_check(&mut mlp, &input, action, target, 300, &mut rng) {
            Ok(err) => worst_mlp = worst_mlp.max(err),
            Err(e) => return SuiteResult::fail(NAME, format!("mlp fixture {i}: {e}")),
        }
    }
    let detail = format!(
        "max relative error over {fixtures} fixtures: cnn {worst_cnn:.3e}, mlp {worst_mlp:.3e} in {:?}",
        start.elapsed()
    );
    if worst_cnn < tolerance && worst_mlp < tolerance {
        SuiteResult::pass(NAME, detail)
    } else {
        SuiteResult::fail(NAME, detail)
    }
}

/// Deterministic 5-state chain MDP. Actions move the state by
/// [+1, -1, 0, +2] (clamped); every step costs 0.05 and reaching the last
/// state pays 1 and ends the episode.
pub struct ChainMdp {
    pub n_states: usize,
    pub gamma: f64,
}

pub const CHAIN_DELTAS: [isize; 4] = [1, -1, 0, 2];
const CHAIN_STEP_COST: f64 = 0.05;
const CHAIN_GOAL_REWARD: f64 = 1.0;

impl ChainMdp {
    pub fn new() -> ChainMdp {
        ChainMdp { n_states: 5, gamma: 0.99 }
    }

    pub fn terminal(&self) -> usize {
        self.n_states - 1
    }

    pub fn transition(&self, s: usize, a: usize) -> (usize, f64, bool) {
        let next =
            (s as isize + CHAIN_DELTAS[a]).clamp(0, self.terminal() as isize) as usize;
        if next == self.terminal() {
            (next, CHAIN_GOAL_REWARD - CHAIN_STEP_COST, true)
        } else {
            (next, -CHAIN_STEP_COST, false)
        }
    }

    /// Exact optimal action values via value iteration.
    pub fn optimal_q(&self) -> Vec<[f64; 4]> {
        let mut v = vec![0.0f64; self.n_states];
        for _ in 0..10_000 {
            let mut next_v = v.clone();
            for s in 0..self.terminal() {
                let mut best = f64::NEG_INFINITY;
                for a in 0..4 {
                    let (sn, r, done) = self.transition(s, a);
                    let q = r + if done { 0.0 } else { self.gamma * v[sn] };
                    best = best.max(q);
                }
                next_v[s] = best;
            }
            let delta: f64 =
                v.iter().zip(&next_v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next_v;
            if delta < 1e-14 {
                break;
            }
        }
        (0..self.n_states)
            .map(|s| {
                let mut qs = [0.0f64; 4];
                if s != self.terminal() {
                    for (a, q) in qs.iter_mut().enumerate() {
                        let (sn, r, done) = self.transition(s, a);
                        *q = r + if done { 0.0 } else { self.gamma * v[sn] };
                    }
                }
                qs
            })
            .collect()
    }

    pub fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut obs = vec![0.0; self.n_states];
        obs[s] = 1.0;
        obs
    }
}

impl Default for ChainMdp {
    fn default() -> Self {
        ChainMdp::new()
    }
}

/// DDQN training on the chain MDP must approach the value-iteration Q within
/// the given tolerance inside the update budget. Returns (suite, updates
/// used, final max error).
pub fn toy_mdp_convergence(max_updates: usize, tolerance: f64) -> (bool, usize, f64) {
    let mdp = ChainMdp::new();
    let q_star = mdp.optimal_q();
    let mut rng = ChaCha8Rng::seed_from_u64(0x305);

    let mut net = MlpQ::new(mdp.n_states, 31).expect("valid net");
    let mut target = net.clone();
    let mut opt = RmsProp::new(0.0025, net.num_params()).expect("valid optimizer");
    let mut scratch = TrainScratch::new(&net);
    let mut replay: ReplayBuffer<usize> = ReplayBuffer::new(10_000).expect("valid buffer");

    let max_err = |net: &MlpQ| -> f64 {
        let mut worst = 0.0f64;
        for s in 0..mdp.terminal() {
            let q = net.q_values(&mdp.one_hot(s)).expect("finite q");
            for a in 0..4 {
                worst = worst.max((q[a] - q_star[s][a]).abs());
            }
        }
        worst
    };

    let mut state = 0usize;
    let mut ep_len = 0usize;
    let mut updates = 0usize;
    let mut err = f64::INFINITY;
    let batch_n = 32usize;
    while updates < max_updates {
        // epsilon-greedy behavior with a 0.2 floor keeps all states visited
        let eps = (1.0 - updates as f64 / 5_000.0).max(0.2);
        let a = if rng.gen_bool(eps) {
            rng.gen_range(0..4)
        } else {
            let q = net.q_values(&mdp.one_hot(state)).expect("finite q");
            let mut best = 0;
            for i in 1..4 {
                if q[i] > q[best] {
                    best = i;
                }
            }
            best
        };
        let (next, reward, done) = mdp.transition(state, a);
        replay.push(Transition {
            obs: state,
            action: Action::from_index(a).unwrap(),
            reward,
            next_obs: next,
            done,
        });
        ep_len += 1;
        state = if done || ep_len >= 40 {
            ep_len = 0;
            0
        } else {
            next
        };

        if replay.len() >= 200 {
            let idx = replay.sample_indices(&mut rng, batch_n).expect("non-empty");
            let mut obs = Vec::with_capacity(batch_n * mdp.n_states);
            let mut next_obs = Vec::with_capacity(batch_n * mdp.n_states);
            let mut actions = Vec::with_capacity(batch_n);
            let mut rewards = Vec::with_capacity(batch_n);
            let mut dones = Vec::with_capacity(batch_n);
            for &i in &idx {
                let t = replay.get(i);
                obs.extend_from_slice(&mdp.one_hot(t.obs));
                next_obs.extend_from_slice(&mdp.one_hot(t.next_obs));
                actions.push(t.action);
                rewards.push(t.reward);
                dones.push(t.done);
            }
            let batch = TrainBatch {
                obs: &obs,
                actions: &actions,
                rewards: &rewards,
                next_obs: &next_obs,
                dones: &dones,
                n: batch_n,
            };
            train_step(&mut net, &target, &batch, mdp.gamma, LossKind::Mse, &mut opt, &mut scratch)
                .expect("finite update");
            updates += 1;
            if updates % 250 == 0 {
                sync_target(&net, &mut target).expect("same shape");
            }
            if updates % 1_000 == 0 {
                err = max_err(&net);
                if err < tolerance {
                    return (true, updates, err);
                }
            }
        }
    }
    err = err.min(max_err(&net));
    (err < tolerance, updates, err)
}

pub fn suite_toy_mdp() -> SuiteResult {
    const NAME: &str = "toy-mdp";
    let start = Instant::now();
    let (ok, updates, err) = toy_mdp_convergence(50_000, 0.05);
    let detail = format!(
        "max |Q - Q*| = {err:.4} after {updates} updates in {:?} (tolerance 0.05)",
        start.elapsed()
    );
    if ok {
        SuiteResult::pass(NAME, detail)
    } else {
        SuiteResult::fail(NAME, detail)
    }
}

/// All suites in order; `fast` skips the convergence suite.
pub fn run_all(fast: bool, fault: Option<Fault>) -> Vec<SuiteResult> {
    let mut results = vec![
        suite_tlo_oracle(2_000, fault),
        suite_rewards(),
        suite_gradcheck(6, 1e-5),
    ];
    if !fast {
        results.push(suite_toy_mdp());
    }
    results
}
