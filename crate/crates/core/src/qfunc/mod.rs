//! Q-function approximators, replay memory, RMSProp and the Double-DQN update
//! with hand-derived gradients plus a finite-difference verification harness.

pub mod cnn;
mod linalg;
pub mod mlp;
pub mod replay;
pub mod rmsprop;
pub mod tabular;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cnn::{CnnCache, CnnQ};
pub use mlp::{MlpCache, MlpQ};
pub use replay::{ReplayBuffer, Transition};
pub use rmsprop::RmsProp;
pub use tabular::TabularQ;

use crate::{math, Action, Error, Result};

/// Behavior contract of any Q-function: a deterministic map from one
/// observation to per-action values.
pub trait QFunction {
    fn input_len(&self) -> usize;
    fn q_values(&self, input: &[f64]) -> Result<[f64; Action::COUNT]>;
}

/// A differentiable Q-function with a flat parameter vector, batched forward
/// evaluation and hand-derived backpropagation.
pub trait ParamNet: QFunction {
    type Cache;

    fn new_cache(&self) -> Self::Cache;
    fn num_params(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Evaluate `n` stacked inputs (row-major n × input_len); `q_out` receives
    /// n × 4 values and the cache everything backward needs.
    fn forward_batch(&self, inputs: &[f64], n: usize, q_out: &mut Vec<f64>, cache: &mut Self::Cache);
    /// Accumulate dLoss/dParams into `grad` given dLoss/dQ (n × 4).
    fn backward_batch(&self, inputs: &[f64], n: usize, dq: &[f64], cache: &mut Self::Cache, grad: &mut [f64]);
}

pub(crate) fn xavier_limit(fan_in: usize, fan_out: usize) -> f64 {
    math::sqrt(6.0 / (fan_in + fan_out) as f64)
}

/// Bootstrapped target: the online network chooses the next action, the
/// target network evaluates it.
pub fn ddqn_target(
    reward: f64,
    gamma: f64,
    q_online_next: &[f64; Action::COUNT],
    q_target_next: &[f64; Action::COUNT],
    done: bool,
) -> f64 {
    if done {
        return reward;
    }
    let mut best = 0;
    for a in 1..Action::COUNT {
        if q_online_next[a] > q_online_next[best] {
            best = a;
        }
    }
    reward + gamma * q_target_next[best]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Mse,
    Huber,
}

const HUBER_DELTA: f64 = 1.0;

/// One mini-batch, all slices row-major over `n` transitions.
pub struct TrainBatch<'a> {
    pub obs: &'a [f64],
    pub actions: &'a [Action],
    pub rewards: &'a [f64],
    pub next_obs: &'a [f64],
    pub dones: &'a [bool],
    pub n: usize,
}

/// Reusable buffers for `train_step`.
pub struct TrainScratch<N: ParamNet> {
    cache: N::Cache,
    tcache: N::Cache,
    grad: Vec<f64>,
    q: Vec<f64>,
    q_next_online: Vec<f64>,
    q_next_target: Vec<f64>,
    dq: Vec<f64>,
}

impl<N: ParamNet> TrainScratch<N> {
    pub fn new(net: &N) -> Self {
        TrainScratch {
            cache: net.new_cache(),
            tcache: net.new_cache(),
            grad: vec![0.0; net.num_params()],
            q: Vec::new(),
            q_next_online: Vec::new(),
            q_next_target: Vec::new(),
            dq: Vec::new(),
        }
    }
}

/// One optimization step on a mini-batch: mean TD error against the
/// double-DQN target, analytic backpropagation, one RMSProp update. Returns
/// the pre-update loss.
pub fn train_step<N: ParamNet>(
    net: &mut N,
    target_net: &N,
    batch: &TrainBatch,
    gamma: f64,
    loss_kind: LossKind,
    opt: &mut RmsProp,
    scratch: &mut TrainScratch<N>,
) -> Result<f64> {
    let n = batch.n;
    if n == 0 {
        return Err(Error::invalid("empty training batch"));
    }
    let in_len = net.input_len();
    if batch.obs.len() != n * in_len
        || batch.next_obs.len() != n * in_len
        || batch.actions.len() != n
        || batch.rewards.len() != n
        || batch.dones.len() != n
    {
        return Err(Error::invalid("batch slice lengths do not match n"));
    }

    // targets from the next observations (no gradients flow through these)
    net.forward_batch(batch.next_obs, n, &mut scratch.q_next_online, &mut scratch.tcache);
    target_net.forward_batch(batch.next_obs, n, &mut scratch.q_next_target, &mut scratch.tcache);

    net.forward_batch(batch.obs, n, &mut scratch.q, &mut scratch.cache);

    scratch.dq.clear();
    scratch.dq.resize(n * Action::COUNT, 0.0);
    let mut loss = 0.0;
    for j in 0..n {
        let qo: [f64; 4] = scratch.q_next_online[j * 4..j * 4 + 4].try_into().unwrap();
        let qt: [f64; 4] = scratch.q_next_target[j * 4..j * 4 + 4].try_into().unwrap();
        let y = ddqn_target(batch.rewards[j], gamma, &qo, &qt, batch.dones[j]);
        let a = batch.actions[j].index();
        let e = scratch.q[j * 4 + a] - y;
        let (l, dl) = match loss_kind {
            LossKind::Mse => (e * e, 2.0 * e),
            LossKind::Huber => {
                if e.abs() <= HUBER_DELTA {
                    (0.5 * e * e, e)
                } else {
                    (HUBER_DELTA * (e.abs() - 0.5 * HUBER_DELTA), HUBER_DELTA * e.signum())
                }
            }
        };
        loss += l;
        scratch.dq[j * 4 + a] = dl / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::training(format_args!("non-finite loss {loss}")));
    }

    scratch.grad.iter_mut().for_each(|g| *g = 0.0);
    net.backward_batch(batch.obs, n, &scratch.dq, &mut scratch.cache, &mut scratch.grad);
    if scratch.grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::training("non-finite gradient"));
    }
    opt.step(net.params_mut(), &scratch.grad)?;
    Ok(loss)
}

/// Copy online parameters into the target network, bit for bit.
pub fn sync_target<N: ParamNet>(online: &N, target: &mut N) -> Result<()> {
    if online.num_params() != target.num_params() {
        return Err(Error::invalid("online and target parameter counts differ"));
    }
    target.params_mut().copy_from_slice(online.params());
    Ok(())
}

/// Compare analytic gradients of the squared error (q[action] − target)²
/// against central finite differences over a random subset of parameters.
/// Returns the max per-parameter relative error |ga − gn| / max(|ga| + |gn|,
/// 1e-12).
pub fn grad_check<N: ParamNet, R: Rng + ?Sized>(
    net: &mut N,
    input: &[f64],
    action: Action,
    target: f64,
    sample_params: usize,
    rng: &mut R,
) -> Result<f64> {
    let n_params = net.num_params();
    if input.len() != net.input_len() {
        return Err(Error::invalid("input length mismatch"));
    }

    // analytic gradient
    let mut cache = net.new_cache();
    let mut q = Vec::new();
    net.forward_batch(input, 1, &mut q, &mut cache);
    let mut dq = vec![0.0; Action::COUNT];
    dq[action.index()] = 2.0 * (q[action.index()] - target);
    let mut grad = vec![0.0; n_params];
    net.backward_batch(input, 1, &dq, &mut cache, &mut grad);

    let loss = |net: &N, q_buf: &mut Vec<f64>, cache: &mut N::Cache| -> f64 {
        net.forward_batch(input, 1, q_buf, cache);
        let e = q_buf[action.index()] - target;
        e * e
    };

    let indices: Vec<usize> = if sample_params >= n_params {
        (0..n_params).collect()
    } else {
        (0..sample_params).map(|_| rng.gen_range(0..n_params)).collect()
    };

    // The finite-difference roundoff floor is ~ulp(loss)/2h, so parameters
    // with weak (but live) gradients get a proportionally larger step to stay
    // above it; such weak paths barely move the ReLU pre-activations, which
    // keeps the larger step clear of derivative discontinuities. Parameters
    // whose gradient is negligible against the gradient vector's own scale
    // are numerically zero; they keep the minimal step and are measured
    // against that scale.
    let e0 = q[action.index()] - target;
    let loss_scale = (e0 * e0).max(1e-2);
    let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let negligible = 1e-8 * gmax;

    let mut max_rel = 0.0f64;
    for &j in &indices {
        let orig = net.params()[j];
        let ga = grad[j];
        let h_rel = if ga.abs() > negligible {
            (3e-11 * loss_scale / ga.abs()).clamp(1e-6, 1e-3)
        } else {
            1e-6
        };
        let h = h_rel * (1.0 + orig.abs());
        net.params_mut()[j] = orig + h;
        let lp = loss(net, &mut q, &mut cache);
        net.params_mut()[j] = orig - h;
        let lm = loss(net, &mut q, &mut cache);
        net.params_mut()[j] = orig;
        let gn = (lp - lm) / (2.0 * h);
        let rel = if ga.abs().max(gn.abs()) > negligible {
            (ga - gn).abs() / (ga.abs() + gn.abs()).max(1e-12)
        } else {
            (ga - gn).abs() / gmax.max(1e-12)
        };
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}
