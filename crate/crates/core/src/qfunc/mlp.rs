//! Fully connected Q-network: input → 32 → 32 → 4 with ReLU activations.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{
    add_bias_rows, matmul, matmul_bt_acc, relu_backward_inplace, relu_inplace, row_sums_acc,
    transpose, PackedB,
};
use super::{xavier_limit, ParamNet, QFunction};
use crate::{Action, Error, Result};

pub const MLP_HIDDEN: usize = 32;
const OUT: usize = Action::COUNT;

#[derive(Debug, Clone)]
pub struct MlpQ {
    input_len: usize,
    params: Vec<f64>,
}

struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    total: usize,
}

fn offsets(input_len: usize) -> Offsets {
    let w1 = 0;
    let b1 = w1 + MLP_HIDDEN * input_len;
    let w2 = b1 + MLP_HIDDEN;
    let b2 = w2 + MLP_HIDDEN * MLP_HIDDEN;
    let w3 = b2 + MLP_HIDDEN;
    let b3 = w3 + OUT * MLP_HIDDEN;
    Offsets { w1, b1, w2, b2, w3, b3, total: b3 + OUT }
}

#[derive(Debug, Default)]
pub struct MlpCache {
    x: PackedB,
    h1: Vec<f64>,
    h1p: PackedB,
    h2: Vec<f64>,
    h2p: PackedB,
    q: Vec<f64>,
    n: usize,
    // backward scratch
    dc: Vec<f64>,
    dcp: PackedB,
    dh: Vec<f64>,
    wt: Vec<f64>,
}

impl MlpQ {
    pub fn new(input_len: usize, seed: u64) -> Result<Self> {
        if input_len == 0 {
            return Err(Error::config("MLP input length must be positive"));
        }
        let off = offsets(input_len);
        let mut params = vec![0.0; off.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        init_linear(&mut params[off.w1..off.b1], input_len, MLP_HIDDEN, &mut rng);
        init_linear(&mut params[off.w2..off.b2], MLP_HIDDEN, MLP_HIDDEN, &mut rng);
        init_linear(&mut params[off.w3..off.b3], MLP_HIDDEN, OUT, &mut rng);
        Ok(MlpQ { input_len, params })
    }

    /// All-zero parameters; forward output is identically zero.
    pub fn zeroed(input_len: usize) -> Result<Self> {
        let mut net = MlpQ::new(input_len, 0)?;
        net.params.iter_mut().for_each(|p| *p = 0.0);
        Ok(net)
    }

    fn off(&self) -> Offsets {
        offsets(self.input_len)
    }
}

fn init_linear<R: Rng>(w: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = xavier_limit(fan_in, fan_out);
    for v in w {
        *v = rng.gen_range(-limit..=limit);
    }
}

impl QFunction for MlpQ {
    fn input_len(&self) -> usize {
        self.input_len
    }

    fn q_values(&self, input: &[f64]) -> Result<[f64; OUT]> {
        if input.len() != self.input_len {
            return Err(Error::invalid(format_args!(
                "expected input of length {}, got {}",
                self.input_len,
                input.len()
            )));
        }
        let mut cache = MlpCache::default();
        let mut q = Vec::new();
        self.forward_batch(input, 1, &mut q, &mut cache);
        let out: [f64; OUT] = [q[0], q[1], q[2], q[3]];
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::training("non-finite Q output"));
        }
        Ok(out)
    }
}

impl ParamNet for MlpQ {
    type Cache = MlpCache;

    fn new_cache(&self) -> MlpCache {
        MlpCache::default()
    }

    fn num_params(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward_batch(&self, inputs: &[f64], n: usize, q_out: &mut Vec<f64>, c: &mut MlpCache) {
        debug_assert_eq!(inputs.len(), n * self.input_len);
        let off = self.off();
        c.n = n;
        c.x.reset(self.input_len, n);
        for j in 0..n {
            for k in 0..self.input_len {
                c.x.set(k, j, inputs[j * self.input_len + k]);
            }
        }
        c.h1.clear();
        c.h1.resize(MLP_HIDDEN * n, 0.0);
        matmul(&self.params[off.w1..off.b1], MLP_HIDDEN, &c.x, &mut c.h1);
        add_bias_rows(&mut c.h1, MLP_HIDDEN, n, &self.params[off.b1..off.w2]);
        relu_inplace(&mut c.h1);

        c.h1p.reset(MLP_HIDDEN, n);
        pack_row_major(&c.h1, MLP_HIDDEN, n, &mut c.h1p);
        c.h2.clear();
        c.h2.resize(MLP_HIDDEN * n, 0.0);
        matmul(&self.params[off.w2..off.b2], MLP_HIDDEN, &c.h1p, &mut c.h2);
        add_bias_rows(&mut c.h2, MLP_HIDDEN, n, &self.params[off.b2..off.w3]);
        relu_inplace(&mut c.h2);

        c.h2p.reset(MLP_HIDDEN, n);
        pack_row_major(&c.h2, MLP_HIDDEN, n, &mut c.h2p);
        c.q.clear();
        c.q.resize(OUT * n, 0.0);
        matmul(&self.params[off.w3..off.b3], OUT, &c.h2p, &mut c.q);
        add_bias_rows(&mut c.q, OUT, n, &self.params[off.b3..]);

        q_out.clear();
        q_out.resize(n * OUT, 0.0);
        for j in 0..n {
            for a in 0..OUT {
                q_out[j * OUT + a] = c.q[a * n + j];
            }
        }
    }

    fn backward_batch(&self, _inputs: &[f64], n: usize, dq: &[f64], c: &mut MlpCache, grad: &mut [f64]) {
        debug_assert_eq!(c.n, n);
        debug_assert_eq!(grad.len(), self.params.len());
        let off = self.off();

        // output layer
        c.dc.clear();
        c.dc.resize(OUT * n, 0.0);
        for j in 0..n {
            for a in 0..OUT {
                c.dc[a * n + j] = dq[j * OUT + a];
            }
        }
        matmul_bt_acc(&c.dc, OUT, &c.h2p, &mut grad[off.w3..off.b3]);
        row_sums_acc(&c.dc, OUT, n, &mut grad[off.b3..]);

        // hidden 2
        transpose(&self.params[off.w3..off.b3], OUT, MLP_HIDDEN, &mut c.wt);
        c.dcp.reset(OUT, n);
        pack_row_major(&c.dc, OUT, n, &mut c.dcp);
        c.dh.clear();
        c.dh.resize(MLP_HIDDEN * n, 0.0);
        matmul(&c.wt, MLP_HIDDEN, &c.dcp, &mut c.dh);
        relu_backward_inplace(&mut c.dh, &c.h2);
        matmul_bt_acc(&c.dh, MLP_HIDDEN, &c.h1p, &mut grad[off.w2..off.b2]);
        row_sums_acc(&c.dh, MLP_HIDDEN, n, &mut grad[off.b2..off.w3]);

        // hidden 1
        transpose(&self.params[off.w2..off.b2], MLP_HIDDEN, MLP_HIDDEN, &mut c.wt);
        c.dcp.reset(MLP_HIDDEN, n);
        pack_row_major(&c.dh, MLP_HIDDEN, n, &mut c.dcp);
        c.dc.clear();
        c.dc.resize(MLP_HIDDEN * n, 0.0);
        matmul(&c.wt, MLP_HIDDEN, &c.dcp, &mut c.dc);
        relu_backward_inplace(&mut c.dc, &c.h1);
        matmul_bt_acc(&c.dc, MLP_HIDDEN, &c.x, &mut grad[off.w1..off.b1]);
        row_sums_acc(&c.dc, MLP_HIDDEN, n, &mut grad[off.b1..off.w2]);
    }
}

pub(super) fn pack_row_major(src: &[f64], k: usize, n: usize, out: &mut PackedB) {
    debug_assert_eq!(out.k, k);
    debug_assert_eq!(out.n, n);
    for row in 0..k {
        for col in 0..n {
            out.set(row, col, src[row * n + col]);
        }
    }
}
