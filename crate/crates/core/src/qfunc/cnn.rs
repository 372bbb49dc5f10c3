//! Convolutional Q-network for grid observations.
//!
//! Three 5×5 stride-3 convolutions (32/64/64 filters, zero padding 2), each
//! followed by ReLU and 2×2 average pooling, then fully connected layers of
//! 128 and 64 units and a 4-unit output head. Optional extra scalar inputs
//! (the baseline agent's ego speed) are concatenated ahead of the first fully
//! connected layer. Pooling degrades to identity along a dimension that has
//! collapsed to a single cell, so the stack accepts any grid size.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{
    add_bias_rows, matmul, matmul_bt_acc, relu_backward_inplace, relu_inplace, row_sums_acc,
    transpose, PackedB,
};
use super::mlp::pack_row_major;
use super::{xavier_limit, ParamNet, QFunction};
use crate::observe::GRID_LAYERS;
use crate::{Action, Error, Result};

const KSIZE: usize = 5;
const STRIDE: usize = 3;
const PAD: usize = 2;
const FILTERS: [usize; 3] = [32, 64, 64];
const FC1: usize = 128;
const FC2: usize = 64;
const OUT: usize = Action::COUNT;

/// Fixed per-channel input normalization: occupancy, relative speed (m/s),
/// relative heading (degrees), semantic code.
const CHANNEL_SCALE: [f64; GRID_LAYERS] = [1.0, 0.125, 1.0 / 180.0, 1.0 / 3.0];
const EXTRA_SCALE: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ConvDims {
    in_h: usize,
    in_w: usize,
    in_c: usize,
    out_h: usize,
    out_w: usize,
    out_c: usize,
    pool_h: usize,
    pool_w: usize,
    win_h: usize,
    win_w: usize,
}

impl ConvDims {
    fn new(in_h: usize, in_w: usize, in_c: usize, out_c: usize) -> Self {
        let out_h = (in_h + STRIDE - 1) / STRIDE;
        let out_w = (in_w + STRIDE - 1) / STRIDE;
        let win_h = if out_h >= 2 { 2 } else { 1 };
        let win_w = if out_w >= 2 { 2 } else { 1 };
        ConvDims {
            in_h,
            in_w,
            in_c,
            out_h,
            out_w,
            out_c,
            pool_h: out_h / win_h,
            pool_w: out_w / win_w,
            win_h,
            win_w,
        }
    }

    fn k(&self) -> usize {
        KSIZE * KSIZE * self.in_c
    }

    fn weight_len(&self) -> usize {
        self.out_c * self.k()
    }
}

#[derive(Debug, Clone)]
pub struct CnnQ {
    grid_h: usize,
    grid_w: usize,
    extra_inputs: usize,
    convs: [ConvDims; 3],
    flat_len: usize,
    fc1_in: usize,
    params: Vec<f64>,
    offs: Offsets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Offsets {
    w: [usize; 3],
    b: [usize; 3],
    fc1_w: usize,
    fc1_b: usize,
    fc2_w: usize,
    fc2_b: usize,
    out_w: usize,
    out_b: usize,
    total: usize,
}

#[derive(Debug, Default)]
pub struct CnnCache {
    n: usize,
    cols: [PackedB; 3],
    conv_out: [Vec<f64>; 3],
    pool_out: [Vec<f64>; 3],
    xp: PackedB,
    fc1: Vec<f64>,
    fc1p: PackedB,
    fc2: Vec<f64>,
    fc2p: PackedB,
    q: Vec<f64>,
    // scratch reused by forward/backward
    gemm_out: Vec<f64>,
    dc: Vec<f64>,
    dcp: PackedB,
    dnhwc_a: Vec<f64>,
    dnhwc_b: Vec<f64>,
    dcols: Vec<f64>,
    wt: Vec<f64>,
}

impl CnnQ {
    pub fn new(grid_h: usize, grid_w: usize, extra_inputs: usize, seed: u64) -> Result<Self> {
        if grid_h == 0 || grid_w == 0 {
            return Err(Error::config("grid dimensions must be positive"));
        }
        let c1 = ConvDims::new(grid_h, grid_w, GRID_LAYERS, FILTERS[0]);
        let c2 = ConvDims::new(c1.pool_h, c1.pool_w, FILTERS[0], FILTERS[1]);
        let c3 = ConvDims::new(c2.pool_h, c2.pool_w, FILTERS[1], FILTERS[2]);
        let flat_len = c3.pool_h * c3.pool_w * FILTERS[2];
        let fc1_in = flat_len + extra_inputs;

        let mut cursor = 0usize;
        let mut w = [0usize; 3];
        let mut b = [0usize; 3];
        for (i, c) in [c1, c2, c3].iter().enumerate() {
            w[i] = cursor;
            cursor += c.weight_len();
            b[i] = cursor;
            cursor += c.out_c;
        }
        let fc1_w = cursor;
        cursor += FC1 * fc1_in;
        let fc1_b = cursor;
        cursor += FC1;
        let fc2_w = cursor;
        cursor += FC2 * FC1;
        let fc2_b = cursor;
        cursor += FC2;
        let out_w = cursor;
        cursor += OUT * FC2;
        let out_b = cursor;
        cursor += OUT;
        let offs = Offsets { w, b, fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b, total: cursor };

        let mut params = vec![0.0; offs.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, c) in [c1, c2, c3].iter().enumerate() {
            let limit = xavier_limit(c.k(), KSIZE * KSIZE * c.out_c);
            for v in &mut params[offs.w[i]..offs.b[i]] {
                *v = rng.gen_range(-limit..=limit);
            }
        }
        for (range, fan_in, fan_out) in [
            (offs.fc1_w..offs.fc1_b, fc1_in, FC1),
            (offs.fc2_w..offs.fc2_b, FC1, FC2),
            (offs.out_w..offs.out_b, FC2, OUT),
        ] {
            let limit = xavier_limit(fan_in, fan_out);
            for v in &mut params[range] {
                *v = rng.gen_range(-limit..=limit);
            }
        }

        Ok(CnnQ {
            grid_h,
            grid_w,
            extra_inputs,
            convs: [c1, c2, c3],
            flat_len,
            fc1_in,
            params,
            offs,
        })
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn extra_inputs(&self) -> usize {
        self.extra_inputs
    }

    fn grid_len(&self) -> usize {
        self.grid_h * self.grid_w * GRID_LAYERS
    }

    fn im2col(
        &self,
        layer: usize,
        inputs: &[f64],
        input_stride: usize,
        n: usize,
        out: &mut PackedB,
    ) {
        let d = self.convs[layer];
        let positions = d.out_h * d.out_w;
        out.reset(d.k(), n * positions);
        for s in 0..n {
            let src = &inputs[s * input_stride..s * input_stride + d.in_h * d.in_w * d.in_c];
            for oy in 0..d.out_h {
                let base_y = (oy * STRIDE) as isize - PAD as isize;
                for ox in 0..d.out_w {
                    let base_x = (ox * STRIDE) as isize - PAD as isize;
                    let col = s * positions + oy * d.out_w + ox;
                    for ky in 0..KSIZE {
                        let y = base_y + ky as isize;
                        if y < 0 || y >= d.in_h as isize {
                            continue;
                        }
                        for kx in 0..KSIZE {
                            let x = base_x + kx as isize;
                            if x < 0 || x >= d.in_w as isize {
                                continue;
                            }
                            let pix = (y as usize * d.in_w + x as usize) * d.in_c;
                            let row0 = (ky * KSIZE + kx) * d.in_c;
                            for c in 0..d.in_c {
                                let mut v = src[pix + c];
                                if layer == 0 {
                                    v *= CHANNEL_SCALE[c];
                                }
                                out.set(row0 + c, col, v);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Forward one conv layer: GEMM, bias, ReLU, repack to NHWC, then pool.
    fn conv_forward(&self, layer: usize, n: usize, cache: &mut CnnCache) {
        let d = self.convs[layer];
        let positions = d.out_h * d.out_w;
        let cols_n = n * positions;
        cache.gemm_out.clear();
        cache.gemm_out.resize(d.out_c * cols_n, 0.0);
        matmul(
            &self.params[self.offs.w[layer]..self.offs.b[layer]],
            d.out_c,
            &cache.cols[layer],
            &mut cache.gemm_out,
        );
        add_bias_rows(
            &mut cache.gemm_out,
            d.out_c,
            cols_n,
            &self.params[self.offs.b[layer]..self.offs.b[layer] + d.out_c],
        );
        relu_inplace(&mut cache.gemm_out);

        let nhwc = &mut cache.conv_out[layer];
        nhwc.clear();
        nhwc.resize(cols_n * d.out_c, 0.0);
        for co in 0..d.out_c {
            let row = &cache.gemm_out[co * cols_n..(co + 1) * cols_n];
            for j in 0..cols_n {
                nhwc[j * d.out_c + co] = row[j];
            }
        }

        let pooled = &mut cache.pool_out[layer];
        pooled.clear();
        pooled.resize(n * d.pool_h * d.pool_w * d.out_c, 0.0);
        let inv = 1.0 / (d.win_h * d.win_w) as f64;
        for s in 0..n {
            let src = &nhwc[s * positions * d.out_c..(s + 1) * positions * d.out_c];
            let dst_base = s * d.pool_h * d.pool_w * d.out_c;
            for py in 0..d.pool_h {
                for px in 0..d.pool_w {
                    let dst = dst_base + (py * d.pool_w + px) * d.out_c;
                    for wy in 0..d.win_h {
                        for wx in 0..d.win_w {
                            let sy = py * d.win_h + wy;
                            let sx = px * d.win_w + wx;
                            let sp = (sy * d.out_w + sx) * d.out_c;
                            for c in 0..d.out_c {
                                pooled[dst + c] += src[sp + c] * inv;
                            }
                        }
                    }
                }
            }
        }
    }
}

impl QFunction for CnnQ {
    fn input_len(&self) -> usize {
        self.grid_len() + self.extra_inputs
    }

    fn q_values(&self, input: &[f64]) -> Result<[f64; OUT]> {
        if input.len() != self.input_len() {
            return Err(Error::invalid(format_args!(
                "expected input of length {}, got {}",
                self.input_len(),
                input.len()
            )));
        }
        let mut cache = CnnCache::default();
        let mut q = Vec::new();
        self.forward_batch(input, 1, &mut q, &mut cache);
        let out: [f64; OUT] = [q[0], q[1], q[2], q[3]];
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::training("non-finite Q output"));
        }
        Ok(out)
    }
}

impl ParamNet for CnnQ {
    type Cache = CnnCache;

    fn new_cache(&self) -> CnnCache {
        CnnCache::default()
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

    fn forward_batch(&self, inputs: &[f64], n: usize, q_out: &mut Vec<f64>, c: &mut CnnCache) {
        let in_len = self.input_len();
        debug_assert_eq!(inputs.len(), n * in_len);
        c.n = n;

        // conv stack
        for layer in 0..3 {
            let mut cols = core::mem::take(&mut c.cols[layer]);
            match layer {
                0 => self.im2col(0, inputs, in_len, n, &mut cols),
                _ => {
                    let prev = core::mem::take(&mut c.pool_out[layer - 1]);
                    let d = self.convs[layer];
                    self.im2col(layer, &prev, d.in_h * d.in_w * d.in_c, n, &mut cols);
                    c.pool_out[layer - 1] = prev;
                }
            }
            c.cols[layer] = cols;
            self.conv_forward(layer, n, c);
        }

        // fully connected input: flattened pool3 plus scaled extra inputs
        c.xp.reset(self.fc1_in, n);
        for j in 0..n {
            let feat = &c.pool_out[2][j * self.flat_len..(j + 1) * self.flat_len];
            for (k, &v) in feat.iter().enumerate() {
                c.xp.set(k, j, v);
            }
            for e in 0..self.extra_inputs {
                let v = inputs[j * in_len + self.grid_len() + e] * EXTRA_SCALE;
                c.xp.set(self.flat_len + e, j, v);
            }
        }

        c.fc1.clear();
        c.fc1.resize(FC1 * n, 0.0);
        matmul(&self.params[self.offs.fc1_w..self.offs.fc1_b], FC1, &c.xp, &mut c.fc1);
        add_bias_rows(&mut c.fc1, FC1, n, &self.params[self.offs.fc1_b..self.offs.fc2_w]);
        relu_inplace(&mut c.fc1);
        c.fc1p.reset(FC1, n);
        pack_row_major(&c.fc1, FC1, n, &mut c.fc1p);

        c.fc2.clear();
        c.fc2.resize(FC2 * n, 0.0);
        matmul(&self.params[self.offs.fc2_w..self.offs.fc2_b], FC2, &c.fc1p, &mut c.fc2);
        add_bias_rows(&mut c.fc2, FC2, n, &self.params[self.offs.fc2_b..self.offs.out_w]);
        relu_inplace(&mut c.fc2);
        c.fc2p.reset(FC2, n);
        pack_row_major(&c.fc2, FC2, n, &mut c.fc2p);

        c.q.clear();
        c.q.resize(OUT * n, 0.0);
        matmul(&self.params[self.offs.out_w..self.offs.out_b], OUT, &c.fc2p, &mut c.q);
        add_bias_rows(&mut c.q, OUT, n, &self.params[self.offs.out_b..]);

        q_out.clear();
        q_out.resize(n * OUT, 0.0);
        for j in 0..n {
            for a in 0..OUT {
                q_out[j * OUT + a] = c.q[a * n + j];
            }
        }
    }

    fn backward_batch(&self, _inputs: &[f64], n: usize, dq: &[f64], c: &mut CnnCache, grad: &mut [f64]) {
        debug_assert_eq!(c.n, n);
        debug_assert_eq!(grad.len(), self.params.len());
        let offs = self.offs;

        // output head
        c.dc.clear();
        c.dc.resize(OUT * n, 0.0);
        for j in 0..n {
            for a in 0..OUT {
                c.dc[a * n + j] = dq[j * OUT + a];
            }
        }
        matmul_bt_acc(&c.dc, OUT, &c.fc2p, &mut grad[offs.out_w..offs.out_b]);
        row_sums_acc(&c.dc, OUT, n, &mut grad[offs.out_b..]);

        // fc2
        transpose(&self.params[offs.out_w..offs.out_b], OUT, FC2, &mut c.wt);
        c.dcp.reset(OUT, n);
        pack_row_major(&c.dc, OUT, n, &mut c.dcp);
        let mut dfc2 = vec![0.0; FC2 * n];
        matmul(&c.wt, FC2, &c.dcp, &mut dfc2);
        relu_backward_inplace(&mut dfc2, &c.fc2);
        matmul_bt_acc(&dfc2, FC2, &c.fc1p, &mut grad[offs.fc2_w..offs.fc2_b]);
        row_sums_acc(&dfc2, FC2, n, &mut grad[offs.fc2_b..offs.out_w]);

        // fc1
        transpose(&self.params[offs.fc2_w..offs.fc2_b], FC2, FC1, &mut c.wt);
        c.dcp.reset(FC2, n);
        pack_row_major(&dfc2, FC2, n, &mut c.dcp);
        let mut dfc1 = vec![0.0; FC1 * n];
        matmul(&c.wt, FC1, &c.dcp, &mut dfc1);
        relu_backward_inplace(&mut dfc1, &c.fc1);
        matmul_bt_acc(&dfc1, FC1, &c.xp, &mut grad[offs.fc1_w..offs.fc1_b]);
        row_sums_acc(&dfc1, FC1, n, &mut grad[offs.fc1_b..offs.fc2_w]);

        // back into the flattened pool3 output (extra-input rows are dropped)
        transpose(&self.params[offs.fc1_w..offs.fc1_b], FC1, self.fc1_in, &mut c.wt);
        c.dcp.reset(FC1, n);
        pack_row_major(&dfc1, FC1, n, &mut c.dcp);
        c.dc.clear();
        c.dc.resize(self.fc1_in * n, 0.0);
        matmul(&c.wt, self.fc1_in, &c.dcp, &mut c.dc);
        c.dnhwc_a.clear();
        c.dnhwc_a.resize(n * self.flat_len, 0.0);
        for j in 0..n {
            for k in 0..self.flat_len {
                c.dnhwc_a[j * self.flat_len + k] = c.dc[k * n + j];
            }
        }

        // conv stack in reverse; dnhwc_a holds the gradient at the pooled
        // output of the current layer
        for layer in (0..3).rev() {
            let d = self.convs[layer];
            let positions = d.out_h * d.out_w;
            let cols_n = n * positions;

            // pool backward
            c.dnhwc_b.clear();
            c.dnhwc_b.resize(cols_n * d.out_c, 0.0);
            let inv = 1.0 / (d.win_h * d.win_w) as f64;
            for s in 0..n {
                let src_base = s * d.pool_h * d.pool_w * d.out_c;
                let dst_base = s * positions * d.out_c;
                for py in 0..d.pool_h {
                    for px in 0..d.pool_w {
                        let src = src_base + (py * d.pool_w + px) * d.out_c;
                        for wy in 0..d.win_h {
                            for wx in 0..d.win_w {
                                let sy = py * d.win_h + wy;
                                let sx = px * d.win_w + wx;
                                let dst = dst_base + (sy * d.out_w + sx) * d.out_c;
                                for ch in 0..d.out_c {
                                    c.dnhwc_b[dst + ch] += c.dnhwc_a[src + ch] * inv;
                                }
                            }
                        }
                    }
                }
            }
            relu_backward_inplace(&mut c.dnhwc_b, &c.conv_out[layer]);

            // repack NHWC gradient to GEMM layout [out_c][cols_n]
            c.dc.clear();
            c.dc.resize(d.out_c * cols_n, 0.0);
            for j in 0..cols_n {
                for ch in 0..d.out_c {
                    c.dc[ch * cols_n + j] = c.dnhwc_b[j * d.out_c + ch];
                }
            }
            matmul_bt_acc(&c.dc, d.out_c, &c.cols[layer], &mut grad[offs.w[layer]..offs.b[layer]]);
            row_sums_acc(
                &c.dc,
                d.out_c,
                cols_n,
                &mut grad[offs.b[layer]..offs.b[layer] + d.out_c],
            );

            if layer == 0 {
                break; // input gradients are not needed
            }

            // gradient w.r.t. this layer's input columns, then scatter back
            transpose(&self.params[offs.w[layer]..offs.b[layer]], d.out_c, d.k(), &mut c.wt);
            c.dcp.reset(d.out_c, cols_n);
            pack_row_major(&c.dc, d.out_c, cols_n, &mut c.dcp);
            c.dcols.clear();
            c.dcols.resize(d.k() * cols_n, 0.0);
            matmul(&c.wt, d.k(), &c.dcp, &mut c.dcols);

            c.dnhwc_a.clear();
            c.dnhwc_a.resize(n * d.in_h * d.in_w * d.in_c, 0.0);
            for s in 0..n {
                for oy in 0..d.out_h {
                    let base_y = (oy * STRIDE) as isize - PAD as isize;
                    for ox in 0..d.out_w {
                        let base_x = (ox * STRIDE) as isize - PAD as isize;
                        let j = s * positions + oy * d.out_w + ox;
                        for ky in 0..KSIZE {
                            let y = base_y + ky as isize;
                            if y < 0 || y >= d.in_h as isize {
                                continue;
                            }
                            for kx in 0..KSIZE {
                                let x = base_x + kx as isize;
                                if x < 0 || x >= d.in_w as isize {
                                    continue;
                                }
                                let pix = (s * d.in_h * d.in_w
                                    + y as usize * d.in_w
                                    + x as usize)
                                    * d.in_c;
                                let row0 = (ky * KSIZE + kx) * d.in_c;
                                for ch in 0..d.in_c {
                                    c.dnhwc_a[pix + ch] += c.dcols[(row0 + ch) * cols_n + j];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_for_desk_grid() {
        let net = CnnQ::new(40, 30, 0, 1).unwrap();
        assert_eq!((net.convs[0].out_h, net.convs[0].out_w), (14, 10));
        assert_eq!((net.convs[0].pool_h, net.convs[0].pool_w), (7, 5));
        assert_eq!((net.convs[1].out_h, net.convs[1].out_w), (3, 2));
        assert_eq!((net.convs[1].pool_h, net.convs[1].pool_w), (1, 1));
        assert_eq!((net.convs[2].out_h, net.convs[2].out_w), (1, 1));
        assert_eq!(net.flat_len, 64);
    }

    #[test]
    fn dims_for_paper_grid() {
        let net = CnnQ::new(80, 60, 0, 1).unwrap();
        assert_eq!((net.convs[0].out_h, net.convs[0].out_w), (27, 20));
        assert_eq!((net.convs[2].pool_h, net.convs[2].pool_w), (1, 1));
        assert_eq!(net.flat_len, 64);
    }

    #[test]
    fn extra_inputs_extend_fc1() {
        let plain = CnnQ::new(12, 9, 0, 1).unwrap();
        let extra = CnnQ::new(12, 9, 1, 1).unwrap();
        assert_eq!(extra.num_params(), plain.num_params() + FC1);
        assert_eq!(extra.input_len(), plain.input_len() + 1);
    }

    #[test]
    fn forward_deterministic_and_batch_consistent() {
        let net = CnnQ::new(6, 6, 0, 3).unwrap();
        let len = net.input_len();
        let inputs: Vec<f64> = (0..2 * len).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.2).collect();
        let mut cache = net.new_cache();
        let mut q = Vec::new();
        net.forward_batch(&inputs, 2, &mut q, &mut cache);
        for j in 0..2 {
            let single = net.q_values(&inputs[j * len..(j + 1) * len]).unwrap();
            for a in 0..4 {
                assert!((q[j * 4 + a] - single[a]).abs() < 1e-12);
            }
        }
    }

    /// Independent naive forward pass used as an oracle: direct convolution
    /// loops, no im2col, no GEMM.
    fn naive_forward(net: &CnnQ, input: &[f64]) -> [f64; 4] {
        let mut cur: Vec<f64> = input[..net.grid_len()].to_vec();
        for (i, v) in cur.iter_mut().enumerate() {
            *v *= CHANNEL_SCALE[i % GRID_LAYERS];
        }
        let (mut h, mut w, mut cch) = (net.grid_h, net.grid_w, GRID_LAYERS);
        for layer in 0..3 {
            let d = net.convs[layer];
            assert_eq!((h, w, cch), (d.in_h, d.in_w, d.in_c));
            let wts = &net.params[net.offs.w[layer]..net.offs.b[layer]];
            let bias = &net.params[net.offs.b[layer]..net.offs.b[layer] + d.out_c];
            let mut conv = vec![0.0; d.out_h * d.out_w * d.out_c];
            for oy in 0..d.out_h {
                for ox in 0..d.out_w {
                    for co in 0..d.out_c {
                        let mut acc = bias[co];
                        for ky in 0..KSIZE {
                            for kx in 0..KSIZE {
                                let y = (oy * STRIDE + ky) as isize - PAD as isize;
                                let x = (ox * STRIDE + kx) as isize - PAD as isize;
                                if y < 0 || y >= h as isize || x < 0 || x >= w as isize {
                                    continue;
                                }
                                for ci in 0..cch {
                                    let iv = cur[(y as usize * w + x as usize) * cch + ci];
                                    let wv = wts[co * d.k() + (ky * KSIZE + kx) * cch + ci];
                                    acc += iv * wv;
                                }
                            }
                        }
                        conv[(oy * d.out_w + ox) * d.out_c + co] = acc.max(0.0);
                    }
                }
            }
            let mut pooled = vec![0.0; d.pool_h * d.pool_w * d.out_c];
            for py in 0..d.pool_h {
                for px in 0..d.pool_w {
                    for co in 0..d.out_c {
                        let mut acc = 0.0;
                        for wy in 0..d.win_h {
                            for wx in 0..d.win_w {
                                let sy = py * d.win_h + wy;
                                let sx = px * d.win_w + wx;
                                acc += conv[(sy * d.out_w + sx) * d.out_c + co];
                            }
                        }
                        pooled[(py * d.pool_w + px) * d.out_c + co] =
                            acc / (d.win_h * d.win_w) as f64;
                    }
                }
            }
            cur = pooled;
            h = d.pool_h;
            w = d.pool_w;
            cch = d.out_c;
        }
        let mut x = cur;
        for e in 0..net.extra_inputs {
            x.push(input[net.grid_len() + e] * EXTRA_SCALE);
        }
        let dense = |x: &[f64], w: &[f64], b: &[f64], out: usize, relu: bool| -> Vec<f64> {
            (0..out)
                .map(|i| {
                    let mut s = b[i];
                    for (j, &xv) in x.iter().enumerate() {
                        s += w[i * x.len() + j] * xv;
                    }
                    if relu {
                        s.max(0.0)
                    } else {
                        s
                    }
                })
                .collect()
        };
        let p = &net.params;
        let o = net.offs;
        let h1 = dense(&x, &p[o.fc1_w..o.fc1_b], &p[o.fc1_b..o.fc2_w], FC1, true);
        let h2 = dense(&h1, &p[o.fc2_w..o.fc2_b], &p[o.fc2_b..o.out_w], FC2, true);
        let q = dense(&h2, &p[o.out_w..o.out_b], &p[o.out_b..], OUT, false);
        [q[0], q[1], q[2], q[3]]
    }

    #[test]
    fn forward_matches_naive_oracle() {
        for seed in [3u64, 11, 99] {
            let net = CnnQ::new(6, 6, 1, seed).unwrap();
            let len = net.input_len();
            let input: Vec<f64> =
                (0..len).map(|i| (((i * 31 + seed as usize) % 17) as f64 - 8.0) * 0.3).collect();
            let got = net.q_values(&input).unwrap();
            let want = naive_forward(&net, &input);
            for a in 0..4 {
                assert!(
                    (got[a] - want[a]).abs() < 1e-10,
                    "seed {seed} action {a}: {} vs {}",
                    got[a],
                    want[a]
                );
            }
        }
    }
}
