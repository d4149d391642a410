//! Tape-based reverse-mode differentiation over row-major 2-D tensors.
//!
//! Every operation appends a node holding its forward value and whatever
//! it needs for the backward pass. [`Graph::backward`] walks the tape in
//! reverse, accumulating gradients only for nodes that depend on a
//! parameter leaf.

use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    /// `x` has `k·p` rows; `p` (p rows) is added to each block of `p` rows.
    AddPeriodic(Var, Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Gelu(Var),
    Relu(Var),
    /// Multi-head self-attention over `[B·T × 3D]` packed q|k|v rows.
    Attention {
        qkv: Var,
        seq: usize,
        heads: usize,
        probs: Vec<f64>,
    },
    MeanPool {
        x: Var,
        seq: usize,
    },
    Concat(Vec<Var>),
    /// Mask already carries the `1 / (1 - p)` scaling.
    Dropout {
        x: Var,
        mask: Vec<f64>,
    },
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    rows: usize,
    cols: usize,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

pub const LN_EPS: f64 = 1e-5;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let th = u.tanh();
    0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// `out[m×n] += a[m×k] · b[k×n]`.
fn view(data: &[f64], rows: usize, cols: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((rows, cols), data).expect("buffer matches shape")
}

/// `out += op(a) · op(b)` on row-major buffers, where `op` transposes when
/// the flag is set. `a` is stored `[ra × ca]`, `b` is `[rb × cb]`.
#[allow(clippy::too_many_arguments)]
fn gemm_acc(a: &[f64], (ra, ca): (usize, usize), ta: bool, b: &[f64], (rb, cb): (usize, usize), tb: bool, out: &mut [f64]) {
    let av = view(a, ra, ca);
    let bv = view(b, rb, cb);
    let av = if ta { av.reversed_axes() } else { av };
    let bv = if tb { bv.reversed_axes() } else { bv };
    let mut ov = ArrayViewMut2::from_shape((av.nrows(), bv.ncols()), out).expect("buffer matches shape");
    general_mat_mul(1.0, &av, &bv, 1.0, &mut ov);
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, rows: usize, cols: usize, op: Op, needs_grad: bool) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node {
            value,
            rows,
            cols,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Constant input; no gradient flows into it.
    pub fn input(&mut self, value: Vec<f64>, rows: usize, cols: usize) -> Var {
        self.push(value, rows, cols, Op::Leaf, false)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Vec<f64>, rows: usize, cols: usize) -> Var {
        self.push(value, rows, cols, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = self.node(v);
        (n.rows, n.cols)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        assert_eq!(k, k2, "matmul inner dimensions");
        let mut out = vec![0.0; m * n];
        gemm_acc(self.value(a), (m, k), false, self.value(b), (k, n), false, &mut out);
        let ng = self.ng(a) || self.ng(b);
        self.push(out, m, n, Op::MatMul(a, b), ng)
    }

    pub fn add_bias(&mut self, x: Var, bias: Var) -> Var {
        let (m, n) = self.shape(x);
        assert_eq!(self.shape(bias), (1, n), "bias shape");
        let b = self.value(bias);
        let mut out = self.value(x).to_vec();
        for row in out.chunks_mut(n) {
            for (o, bv) in row.iter_mut().zip(b) {
                *o += bv;
            }
        }
        let ng = self.ng(x) || self.ng(bias);
        self.push(out, m, n, Op::AddBias(x, bias), ng)
    }

    /// `x · w + b`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let y = self.matmul(x, w);
        self.add_bias(y, b)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "add shapes");
        let (m, n) = self.shape(a);
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        let ng = self.ng(a) || self.ng(b);
        self.push(out, m, n, Op::Add(a, b), ng)
    }

    pub fn add_periodic(&mut self, x: Var, p: Var) -> Var {
        let (m, n) = self.shape(x);
        let (pr, pc) = self.shape(p);
        assert!(pc == n && pr > 0 && m % pr == 0, "periodic add shapes");
        let pv = self.value(p);
        let mut out = self.value(x).to_vec();
        for block in out.chunks_mut(pr * n) {
            for (o, v) in block.iter_mut().zip(pv) {
                *o += v;
            }
        }
        let ng = self.ng(x) || self.ng(p);
        self.push(out, m, n, Op::AddPeriodic(x, p), ng)
    }

    /// Row-wise layer normalization with affine `gamma`, `beta` (`1 × n`).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let (m, n) = self.shape(x);
        let xv = self.value(x);
        let g = self.value(gamma);
        let b = self.value(beta);
        let mut xhat = vec![0.0; m * n];
        let mut inv_std = vec![0.0; m];
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &xv[i * n..(i + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std[i] = is;
            for j in 0..n {
                let h = (row[j] - mean) * is;
                xhat[i * n + j] = h;
                out[i * n + j] = h * g[j] + b[j];
            }
        }
        let ng = self.ng(x) || self.ng(gamma) || self.ng(beta);
        self.push(
            out,
            m,
            n,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            ng,
        )
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let (m, n) = self.shape(x);
        let out = self.value(x).iter().map(|&v| gelu(v)).collect();
        let ng = self.ng(x);
        self.push(out, m, n, Op::Gelu(x), ng)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let (m, n) = self.shape(x);
        let out = self.value(x).iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect();
        let ng = self.ng(x);
        self.push(out, m, n, Op::Relu(x), ng)
    }

    /// Scaled dot-product self-attention within each block of `seq` rows.
    /// Input `[B·seq × 3D]` (q | k | v), output `[B·seq × D]`.
    pub fn attention(&mut self, qkv: Var, seq: usize, heads: usize) -> Var {
        let (m, c3) = self.shape(qkv);
        assert!(c3 % 3 == 0 && m % seq == 0, "attention shapes");
        let d = c3 / 3;
        assert!(d % heads == 0, "embed dim divisible by heads");
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let batches = m / seq;
        let x = self.value(qkv);
        let mut probs = vec![0.0; batches * heads * seq * seq];
        let mut out = vec![0.0; m * d];
        for b in 0..batches {
            for h in 0..heads {
                let p = &mut probs[(b * heads + h) * seq * seq..][..seq * seq];
                for i in 0..seq {
                    let qi = &x[(b * seq + i) * c3 + h * dh..][..dh];
                    let mut max = f64::NEG_INFINITY;
                    for j in 0..seq {
                        let kj = &x[(b * seq + j) * c3 + d + h * dh..][..dh];
                        let s = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                        p[i * seq + j] = s;
                        max = max.max(s);
                    }
                    let mut z = 0.0;
                    for j in 0..seq {
                        let e = (p[i * seq + j] - max).exp();
                        p[i * seq + j] = e;
                        z += e;
                    }
                    let orow = &mut out[(b * seq + i) * d + h * dh..][..dh];
                    for j in 0..seq {
                        let w = p[i * seq + j] / z;
                        p[i * seq + j] = w;
                        let vj = &x[(b * seq + j) * c3 + 2 * d + h * dh..][..dh];
                        for (o, v) in orow.iter_mut().zip(vj) {
                            *o += w * v;
                        }
                    }
                }
            }
        }
        let ng = self.ng(qkv);
        self.push(out, m, d, Op::Attention { qkv, seq, heads, probs }, ng)
    }

    /// Mean over each block of `seq` rows: `[B·seq × n] → [B × n]`.
    pub fn mean_pool(&mut self, x: Var, seq: usize) -> Var {
        let (m, n) = self.shape(x);
        assert!(seq > 0 && m % seq == 0);
        let b = m / seq;
        let xv = self.value(x);
        let mut out = vec![0.0; b * n];
        for (r, row) in xv.chunks(n).enumerate() {
            let o = &mut out[(r / seq) * n..][..n];
            for (a, v) in o.iter_mut().zip(row) {
                *a += v / seq as f64;
            }
        }
        let ng = self.ng(x);
        self.push(out, b, n, Op::MeanPool { x, seq }, ng)
    }

    /// Column-wise concatenation of tensors with equal row counts.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let m = self.shape(parts[0]).0;
        assert!(parts.iter().all(|&p| self.shape(p).0 == m));
        let total: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Vec::with_capacity(m * total);
        for i in 0..m {
            for &p in parts {
                let n = self.shape(p).1;
                out.extend_from_slice(&self.value(p)[i * n..(i + 1) * n]);
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(out, m, total, Op::Concat(parts.to_vec()), ng)
    }

    /// Inverted dropout. Returns `x` unchanged when `rate` is zero.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, rng: &mut R) -> Var {
        if rate <= 0.0 {
            return x;
        }
        let (m, n) = self.shape(x);
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..m * n)
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let out = self.value(x).iter().zip(&mask).map(|(v, k)| v * k).collect();
        let ng = self.ng(x);
        self.push(out, m, n, Op::Dropout { x, mask }, ng)
    }

    /// Mean softmax cross-entropy; returns a `1 × 1` node.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Var {
        let (m, n) = self.shape(logits);
        assert_eq!(labels.len(), m, "one label per row");
        let lv = self.value(logits);
        let mut probs = vec![0.0; m * n];
        let mut loss = 0.0;
        for i in 0..m {
            let row = &lv[i * n..(i + 1) * n];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let lse = max + z.ln();
            for j in 0..n {
                probs[i * n + j] = (row[j] - lse).exp();
            }
            loss += lse - row[labels[i]];
        }
        loss /= m as f64;
        let ng = self.ng(logits);
        self.push(
            vec![loss],
            1,
            1,
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            ng,
        )
    }

    /// Gradients of the scalar `root` with respect to every node that needs
    /// one.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.shape(root), (1, 1), "backward from a scalar");
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(vec![1.0]);

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Gradients { grads }
    }

    fn accum(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.ng(v) {
            return;
        }
        let len = self.node(v).value.len();
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
        f(slot);
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let (m, n) = (node.rows, node.cols);
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (_, k) = self.shape(*a);
                let av = self.value(*a);
                let bv = self.value(*b);
                // dA = G · Bᵀ, dB = Aᵀ · G.
                self.accum(grads, *a, |ga| gemm_acc(g, (m, n), false, bv, (k, n), true, ga));
                self.accum(grads, *b, |gb| gemm_acc(av, (m, k), true, g, (m, n), false, gb));
            }
            Op::AddBias(x, b) => {
                self.accum(grads, *x, |gx| gx.iter_mut().zip(g).for_each(|(o, v)| *o += v));
                self.accum(grads, *b, |gb| {
                    for row in g.chunks(n) {
                        gb.iter_mut().zip(row).for_each(|(o, v)| *o += v);
                    }
                });
            }
            Op::Add(a, b) => {
                self.accum(grads, *a, |ga| ga.iter_mut().zip(g).for_each(|(o, v)| *o += v));
                self.accum(grads, *b, |gb| gb.iter_mut().zip(g).for_each(|(o, v)| *o += v));
            }
            Op::AddPeriodic(x, p) => {
                let period = self.shape(*p).0 * n;
                self.accum(grads, *x, |gx| gx.iter_mut().zip(g).for_each(|(o, v)| *o += v));
                self.accum(grads, *p, |gp| {
                    for block in g.chunks(period) {
                        gp.iter_mut().zip(block).for_each(|(o, v)| *o += v);
                    }
                });
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let gv = self.value(*gamma);
                self.accum(grads, *gamma, |gg| {
                    for (row, hrow) in g.chunks(n).zip(xhat.chunks(n)) {
                        for j in 0..n {
                            gg[j] += row[j] * hrow[j];
                        }
                    }
                });
                self.accum(grads, *beta, |gb| {
                    for row in g.chunks(n) {
                        gb.iter_mut().zip(row).for_each(|(o, v)| *o += v);
                    }
                });
                self.accum(grads, *x, |gx| {
                    let nf = n as f64;
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        let hrow = &xhat[i * n..(i + 1) * n];
                        let mut sum_d = 0.0;
                        let mut sum_dh = 0.0;
                        for j in 0..n {
                            let d = grow[j] * gv[j];
                            sum_d += d;
                            sum_dh += d * hrow[j];
                        }
                        for j in 0..n {
                            let d = grow[j] * gv[j];
                            gx[i * n + j] += inv_std[i] * (d - sum_d / nf - hrow[j] * sum_dh / nf);
                        }
                    }
                });
            }
            Op::Gelu(x) => {
                let xv = self.value(*x);
                self.accum(grads, *x, |gx| {
                    for ((o, v), d) in gx.iter_mut().zip(xv).zip(g) {
                        *o += d * gelu_grad(*v);
                    }
                });
            }
            Op::Relu(x) => {
                let xv = self.value(*x);
                self.accum(grads, *x, |gx| {
                    for ((o, v), d) in gx.iter_mut().zip(xv).zip(g) {
                        if *v > 0.0 {
                            *o += d;
                        }
                    }
                });
            }
            Op::Attention {
                qkv,
                seq,
                heads,
                probs,
            } => {
                let (seq, heads) = (*seq, *heads);
                let x = self.value(*qkv);
                let c3 = 3 * n;
                let d = n;
                let dh = d / heads;
                let scale = 1.0 / (dh as f64).sqrt();
                let batches = m / seq;
                self.accum(grads, *qkv, |gq| {
                    let mut dp = vec![0.0; seq];
                    for b in 0..batches {
                        for h in 0..heads {
                            let p = &probs[(b * heads + h) * seq * seq..][..seq * seq];
                            for i in 0..seq {
                                let go = &g[(b * seq + i) * d + h * dh..][..dh];
                                // dP_ij = dOut_i · v_j ; dV_j += p_ij dOut_i
                                for j in 0..seq {
                                    let vrow = (b * seq + j) * c3 + 2 * d + h * dh;
                                    let vj = &x[vrow..vrow + dh];
                                    dp[j] = go.iter().zip(vj).map(|(a, b)| a * b).sum();
                                    let w = p[i * seq + j];
                                    for (o, gv) in gq[vrow..vrow + dh].iter_mut().zip(go) {
                                        *o += w * gv;
                                    }
                                }
                                let dot: f64 = (0..seq).map(|j| p[i * seq + j] * dp[j]).sum();
                                let qrow = (b * seq + i) * c3 + h * dh;
                                for j in 0..seq {
                                    let ds = p[i * seq + j] * (dp[j] - dot) * scale;
                                    if ds == 0.0 {
                                        continue;
                                    }
                                    let krow = (b * seq + j) * c3 + d + h * dh;
                                    for t in 0..dh {
                                        gq[qrow + t] += ds * x[krow + t];
                                        gq[krow + t] += ds * x[qrow + t];
                                    }
                                }
                            }
                        }
                    }
                });
            }
            Op::MeanPool { x, seq } => {
                let seq = *seq;
                self.accum(grads, *x, |gx| {
                    for (r, row) in gx.chunks_mut(n).enumerate() {
                        let src = &g[(r / seq) * n..][..n];
                        row.iter_mut().zip(src).for_each(|(o, v)| *o += v / seq as f64);
                    }
                });
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape(p).1;
                    self.accum(grads, p, |gp| {
                        for i in 0..m {
                            for j in 0..w {
                                gp[i * w + j] += g[i * n + offset + j];
                            }
                        }
                    });
                    offset += w;
                }
            }
            Op::Dropout { x, mask } => {
                self.accum(grads, *x, |gx| {
                    for ((o, d), k) in gx.iter_mut().zip(g).zip(mask) {
                        *o += d * k;
                    }
                });
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
            } => {
                let (rows, cols) = self.shape(*logits);
                let scale = g[0] / rows as f64;
                self.accum(grads, *logits, |gl| {
                    for i in 0..rows {
                        for j in 0..cols {
                            let y = if labels[i] == j { 1.0 } else { 0.0 };
                            gl[i * cols + j] += scale * (probs[i * cols + j] - y);
                        }
                    }
                });
            }
        }
    }
}

pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of `v`, or `None` if nothing flowed into it.
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    pub fn take(&mut self, v: Var) -> Option<Vec<f64>> {
        self.grads[v.0].take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    /// Central-difference check of d(loss)/d(param) for a graph builder.
    fn check(build: impl Fn(&mut Graph, Var) -> Var, rows: usize, cols: usize, seed_value: u64) {
        let mut rng = seed::rng(seed_value);
        let p0: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>() - 0.5).collect();
        let eval = |p: &[f64]| {
            let mut g = Graph::new();
            let v = g.param(p.to_vec(), rows, cols);
            let out = build(&mut g, v);
            g.value(out)[0]
        };
        let mut g = Graph::new();
        let v = g.param(p0.clone(), rows, cols);
        let out = build(&mut g, v);
        let grads = g.backward(out);
        let analytic = grads.get(v).unwrap();
        let h = 1e-5;
        for i in 0..p0.len() {
            let mut plus = p0.clone();
            plus[i] += h;
            let mut minus = p0.clone();
            minus[i] -= h;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let err = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-6);
            assert!(err < 1e-5, "element {i}: fd {fd} vs {}", analytic[i]);
        }
    }

    /// Reduce any tensor to a scalar with a fixed random projection.
    fn project(g: &mut Graph, x: Var, labels_seed: u64) -> Var {
        let (m, n) = g.shape(x);
        let mut rng = seed::rng(labels_seed);
        let w: Vec<f64> = (0..n * 2).map(|_| rng.random::<f64>() - 0.5).collect();
        let w = g.input(w, n, 2);
        let logits = g.matmul(x, w);
        let labels: Vec<usize> = (0..m).map(|i| i % 2).collect();
        g.cross_entropy(logits, &labels)
    }

    #[test]
    fn grad_layer_norm() {
        check(
            |g, p| {
                let gamma = g.input(vec![1.0, 0.5, -0.3, 2.0], 1, 4);
                let beta = g.input(vec![0.1, 0.0, 0.2, -0.1], 1, 4);
                let y = g.layer_norm(p, gamma, beta);
                project(g, y, 1)
            },
            3,
            4,
            2,
        );
    }

    #[test]
    fn grad_attention() {
        check(
            |g, p| {
                let y = g.attention(p, 3, 2);
                project(g, y, 3)
            },
            6,
            12,
            4,
        );
    }

    #[test]
    fn grad_pool_concat_gelu_periodic() {
        check(
            |g, p| {
                let pos = g.input(vec![0.3, -0.2, 0.1, 0.4, 0.0, 0.5], 2, 3);
                let a = g.add_periodic(p, pos);
                let b = g.gelu(a);
                let c = g.mean_pool(b, 2);
                let d = g.relu(p);
                let d = g.mean_pool(d, 2);
                let e = g.concat(&[c, d]);
                project(g, e, 5)
            },
            4,
            3,
            6,
        );
    }

    #[test]
    fn grad_matmul_both_sides() {
        check(
            |g, p| {
                let x = g.matmul(p, p);
                let b = g.input(vec![0.1, 0.2, 0.3], 1, 3);
                let y = g.add_bias(x, b);
                let z = g.add(y, p);
                project(g, z, 7)
            },
            3,
            3,
            8,
        );
    }

    #[test]
    fn uniform_logits_give_ln2() {
        let mut g = Graph::new();
        let l = g.input(vec![0.0; 6], 3, 2);
        let loss = g.cross_entropy(l, &[0, 1, 1]);
        assert!((g.value(loss)[0] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dropout_zero_rate_is_identity() {
        let mut g = Graph::new();
        let x = g.input(vec![1.0, 2.0], 1, 2);
        let y = g.dropout(x, 0.0, &mut seed::rng(1));
        assert_eq!(x, y);
        let z = g.dropout(x, 0.5, &mut seed::rng(1));
        assert!(g.value(z).iter().all(|&v| v == 0.0 || v == 2.0 || v == 4.0));
    }
}
