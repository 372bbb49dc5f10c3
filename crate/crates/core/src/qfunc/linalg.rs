//! Small dense linear algebra used by the Q-networks.
//!
//! The right-hand operand of every product is stored in 8-wide column panels
//! so the inner kernel streams contiguous memory; one training update spends
//! almost all of its time in these two routines.

use alloc::vec::Vec;

pub const PANEL: usize = 8;

/// K×N matrix stored as consecutive column panels of width 8. Panel `jp`
/// holds, for each row k, the 8 values of columns jp*8..jp*8+8 (zero padded
/// past N).
#[derive(Debug, Clone, Default)]
pub struct PackedB {
    pub k: usize,
    pub n: usize,
    pub data: Vec<f64>,
}

impl PackedB {
    /// Prepare for writing a k×n matrix. When the shape is unchanged the
    /// buffer is kept as-is: writers always touch the same positions for a
    /// given shape, so stale values are overwritten and padding stays zero.
    pub fn reset(&mut self, k: usize, n: usize) {
        let len = k * n.div_ceil(PANEL) * PANEL;
        if self.k == k && self.n == n && self.data.len() == len {
            return;
        }
        self.k = k;
        self.n = n;
        self.data.clear();
        self.data.resize(len, 0.0);
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        (col / PANEL) * self.k * PANEL + row * PANEL + (col % PANEL)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        let i = self.index(row, col);
        self.data[i] = v;
    }

    #[cfg(test)]
    pub fn from_row_major(src: &[f64], k: usize, n: usize) -> Self {
        let mut b = PackedB::default();
        b.reset(k, n);
        for row in 0..k {
            for col in 0..n {
                b.set(row, col, src[row * n + col]);
            }
        }
        b
    }
}

/// C[M×N] = A[M×K] · B, with C row-major and overwritten.
pub fn matmul(a: &[f64], m: usize, b: &PackedB, c: &mut [f64]) {
    let (k, n) = (b.k, b.n);
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(c.len(), m * n);
    let npanels = n.div_ceil(PANEL);
    for jp in 0..npanels {
        let panel = &b.data[jp * k * PANEL..(jp + 1) * k * PANEL];
        let j0 = jp * PANEL;
        let jw = (n - j0).min(PANEL);
        let mut i = 0;
        while i < m {
            let mh = (m - i).min(4);
            let mut acc = [[0.0f64; PANEL]; 4];
            for p in 0..k {
                let bv = &panel[p * PANEL..p * PANEL + PANEL];
                for r in 0..mh {
                    let av = a[(i + r) * k + p];
                    let ac = &mut acc[r];
                    for l in 0..PANEL {
                        ac[l] += av * bv[l];
                    }
                }
            }
            for r in 0..mh {
                let crow = &mut c[(i + r) * n + j0..(i + r) * n + j0 + jw];
                crow.copy_from_slice(&acc[r][..jw]);
            }
            i += mh;
        }
    }
}

/// DW[M×K] += DC[M×N] · Bᵀ where B is packed K×N. Used for weight gradients.
pub fn matmul_bt_acc(dc: &[f64], m: usize, b: &PackedB, dw: &mut [f64]) {
    let (k, n) = (b.k, b.n);
    debug_assert_eq!(dc.len(), m * n);
    debug_assert_eq!(dw.len(), m * k);
    let npanels = n.div_ceil(PANEL);
    for jp in 0..npanels {
        let panel = &b.data[jp * k * PANEL..(jp + 1) * k * PANEL];
        let j0 = jp * PANEL;
        let jw = (n - j0).min(PANEL);
        for r in 0..m {
            let mut a8 = [0.0f64; PANEL];
            a8[..jw].copy_from_slice(&dc[r * n + j0..r * n + j0 + jw]);
            let dwrow = &mut dw[r * k..(r + 1) * k];
            for p in 0..k {
                let bv = &panel[p * PANEL..p * PANEL + PANEL];
                let mut s = 0.0;
                for l in 0..PANEL {
                    s += a8[l] * bv[l];
                }
                dwrow[p] += s;
            }
        }
    }
}

pub fn transpose(a: &[f64], m: usize, k: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(m * k, 0.0);
    for i in 0..m {
        for j in 0..k {
            out[j * m + i] = a[i * k + j];
        }
    }
}

/// Row sums of a row-major M×N matrix, accumulated into `out` (length M).
pub fn row_sums_acc(a: &[f64], m: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let mut s = 0.0;
        for j in 0..n {
            s += a[i * n + j];
        }
        out[i] += s;
    }
}

pub fn relu_inplace(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// dX masked by the forward ReLU output (derivative 0 at and below zero).
pub fn relu_backward_inplace(dx: &mut [f64], out: &[f64]) {
    for (d, &o) in dx.iter_mut().zip(out) {
        if o <= 0.0 {
            *d = 0.0;
        }
    }
}

pub fn add_bias_rows(c: &mut [f64], m: usize, n: usize, bias: &[f64]) {
    for i in 0..m {
        let b = bias[i];
        for v in &mut c[i * n..(i + 1) * n] {
            *v += b;
        }
    }
}
