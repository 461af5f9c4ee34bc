//! Reverse-mode differentiation over an explicit operation record.
//!
//! Every op appends one node holding its forward value plus whatever the
//! backward rule needs. Nodes are created in topological order, so the
//! backward sweep is a single reverse pass over the node list.

use std::sync::Arc;

use crate::error::{dim_err, Result, TensorError};
use crate::kernels::{self, mm_nn, mm_nt, mm_tn};
use crate::real::Real;
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    AddScalar(Var),
    Exp(Var),
    Log(Var),
    Square(Var),
    Softplus(Var),
    Gelu(Var),
    Clamp(Var, T, T),
    Reshape(Var),
    MatMul {
        a: Var,
        b: Var,
        batch: usize,
        m: usize,
        k: usize,
        n: usize,
        trans_b: bool,
    },
    Gather {
        src: Var,
        index: Arc<[usize]>,
    },
    ExpandRows(Var),
    SumAll(Var),
    Softmax {
        src: Var,
        outer: usize,
        len: usize,
        inner: usize,
    },
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<T>,
        rstd: Vec<T>,
    },
    GaussianBits {
        value: Var,
        mean: Var,
        scale: Var,
        floor: f64,
    },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Operation record for one forward pass. Confined to one thread; build a
/// separate graph per data shard.
#[derive(Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients produced by [`Graph::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, v: Var) -> Option<Vec<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn same_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return dim_err(op, format!("shapes {a:?} and {b:?} differ"));
    }
    Ok(())
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Leaf node. Only leaves created with `requires_grad` receive gradients.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    fn zip_map(&mut self, op_name: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape(op_name, ta.shape(), tb.shape())?;
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    fn map(&self, a: Var, f: impl Fn(T) -> T) -> Tensor<T> {
        let ta = self.value(a);
        Tensor::from_fn(ta.shape().to_vec(), |i| f(ta.data()[i]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_map("add", a, b, |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_map("sub", a, b, |x, y| x - y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_map("mul", a, b, |x, y| x * y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let out = self.map(a, |x| x * s);
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, s), rg)
    }

    pub fn add_scalar(&mut self, a: Var, s: T) -> Var {
        let out = self.map(a, |x| x + s);
        let rg = self.rg(a);
        self.push(out, Op::AddScalar(a), rg)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.map(a, |x| x.exp());
        let rg = self.rg(a);
        self.push(out, Op::Exp(a), rg)
    }

    pub fn log(&mut self, a: Var) -> Var {
        let out = self.map(a, |x| x.ln());
        let rg = self.rg(a);
        self.push(out, Op::Log(a), rg)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let out = self.map(a, |x| x * x);
        let rg = self.rg(a);
        self.push(out, Op::Square(a), rg)
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let out = self.map(a, kernels::softplus);
        let rg = self.rg(a);
        self.push(out, Op::Softplus(a), rg)
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let out = self.map(a, kernels::gelu);
        let rg = self.rg(a);
        self.push(out, Op::Gelu(a), rg)
    }

    /// Elementwise clamp; the gradient is zero where the input is clipped.
    pub fn clamp(&mut self, a: Var, lo: T, hi: T) -> Var {
        let out = self.map(a, |x| x.max(lo).min(hi));
        let rg = self.rg(a);
        self.push(out, Op::Clamp(a, lo, hi), rg)
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let out = self.value(a).clone().reshaped(shape)?;
        let rg = self.rg(a);
        Ok(self.push(out, Op::Reshape(a), rg))
    }

    /// Matrix product of 2-D operands, `a[m×k] · b[k×n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return dim_err("matmul", format!("cannot multiply {sa:?} by {sb:?}"));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        self.matmul_raw(a, b, 1, m, k, n, false, vec![m, n])
    }

    /// Batched product `a[B×m×k] · b[B×k×n]`, or `a · bᵀ` with `b[B×n×k]`
    /// when `trans_b` is set.
    pub fn bmm(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 3 || sb.len() != 3 || sa[0] != sb[0] {
            return dim_err("bmm", format!("incompatible batches {sa:?} and {sb:?}"));
        }
        let (batch, m, k) = (sa[0], sa[1], sa[2]);
        let (kb, n) = if trans_b { (sb[2], sb[1]) } else { (sb[1], sb[2]) };
        if kb != k {
            return dim_err("bmm", format!("inner extents {k} and {kb} differ"));
        }
        self.matmul_raw(a, b, batch, m, k, n, trans_b, vec![batch, m, n])
    }

    #[allow(clippy::too_many_arguments)]
    fn matmul_raw(
        &mut self,
        a: Var,
        b: Var,
        batch: usize,
        m: usize,
        k: usize,
        n: usize,
        trans_b: bool,
        shape: Vec<usize>,
    ) -> Result<Var> {
        let (da, db) = (self.value(a).data(), self.value(b).data());
        let mut out = vec![T::zero(); batch * m * n];
        for bi in 0..batch {
            let a_s = &da[bi * m * k..(bi + 1) * m * k];
            let b_s = &db[bi * k * n..(bi + 1) * k * n];
            let c_s = &mut out[bi * m * n..(bi + 1) * m * n];
            if trans_b {
                mm_nt(a_s, b_s, c_s, m, k, n);
            } else {
                mm_nn(a_s, b_s, c_s, m, k, n);
            }
        }
        let rg = self.rg(a) || self.rg(b);
        let op = Op::MatMul {
            a,
            b,
            batch,
            m,
            k,
            n,
            trans_b,
        };
        Ok(self.push(Tensor::new(shape, out)?, op, rg))
    }

    /// `out[i] = src[index[i]]` (flat indices), reshaped to `shape`.
    /// Covers transposes, window partitioning and patch rearrangement.
    pub fn gather(&mut self, src: Var, index: Arc<[usize]>, shape: Vec<usize>) -> Result<Var> {
        let s = self.value(src).data();
        if let Some(&bad) = index.iter().find(|&&i| i >= s.len()) {
            return dim_err("gather", format!("index {bad} out of range {}", s.len()));
        }
        let data = index.iter().map(|&i| s[i]).collect();
        let out = Tensor::new(shape, data)?;
        let rg = self.rg(src);
        Ok(self.push(out, Op::Gather { src, index }, rg))
    }

    /// Repeat a vector `[d]` into `[rows, d]`.
    pub fn expand_rows(&mut self, src: Var, rows: usize) -> Result<Var> {
        let s = self.value(src);
        if s.rank() != 1 {
            return dim_err("expand_rows", format!("expected a vector, got {:?}", s.shape()));
        }
        let d = s.numel();
        let mut data = Vec::with_capacity(rows * d);
        for _ in 0..rows {
            data.extend_from_slice(s.data());
        }
        let out = Tensor::new(vec![rows, d], data)?;
        let rg = self.rg(src);
        Ok(self.push(out, Op::ExpandRows(src), rg))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::SumAll(a), rg)
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = self.value(a).numel();
        let s = self.sum_all(a);
        self.scale(s, T::one() / T::from_f64(n as f64))
    }

    /// Softmax along `axis`, stabilised by subtracting the running maximum.
    pub fn softmax(&mut self, src: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(src).to_vec();
        if axis >= shape.len() {
            return dim_err("softmax", format!("axis {axis} invalid for {shape:?}"));
        }
        let outer: usize = shape[..axis].iter().product();
        let len = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let x = self.value(src).data();
        let mut y = vec![T::zero(); x.len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                let mut mx = T::neg_infinity();
                for j in 0..len {
                    mx = mx.max(x[base + j * inner]);
                }
                let mut total = T::zero();
                for j in 0..len {
                    let e = (x[base + j * inner] - mx).exp();
                    y[base + j * inner] = e;
                    total += e;
                }
                for j in 0..len {
                    y[base + j * inner] = y[base + j * inner] / total;
                }
            }
        }
        let rg = self.rg(src);
        let op = Op::Softmax {
            src,
            outer,
            len,
            inner,
        };
        Ok(self.push(Tensor::new(shape, y)?, op, rg))
    }

    /// Layer normalisation over the last axis followed by a per-feature
    /// affine map.
    pub fn layernorm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let d = *shape.last().unwrap_or(&0);
        if self.shape(gain) != [d] || self.shape(bias) != [d] {
            return dim_err(
                "layernorm",
                format!(
                    "gain {:?} / bias {:?} must be [{d}]",
                    self.shape(gain),
                    self.shape(bias)
                ),
            );
        }
        let xs = self.value(x).data();
        let g = self.value(gain).data();
        let b = self.value(bias).data();
        let rows = xs.len() / d.max(1);
        let mut xhat = vec![T::zero(); xs.len()];
        let mut rstd = vec![T::zero(); rows];
        let mut out = vec![T::zero(); xs.len()];
        let inv_d = T::one() / T::from_f64(d as f64);
        for r in 0..rows {
            let row = &xs[r * d..(r + 1) * d];
            let mean = row.iter().copied().sum::<T>() * inv_d;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_d;
            let rs = T::one() / (var + T::from_f64(eps)).sqrt();
            rstd[r] = rs;
            for j in 0..d {
                let h = (row[j] - mean) * rs;
                xhat[r * d + j] = h;
                out[r * d + j] = h * g[j] + b[j];
            }
        }
        let rg = self.rg(x) || self.rg(gain) || self.rg(bias);
        let op = Op::LayerNorm {
            x,
            gain,
            bias,
            xhat,
            rstd,
        };
        Ok(self.push(Tensor::new(shape, out)?, op, rg))
    }

    /// Elementwise `-log2 max(p, floor)` where `p` is the mass of the unit bin
    /// around `value` under N(mean, scale²).
    pub fn gaussian_bits(&mut self, value: Var, mean: Var, scale: Var, floor: f64) -> Result<Var> {
        same_shape("gaussian_bits", self.shape(value), self.shape(mean))?;
        same_shape("gaussian_bits", self.shape(value), self.shape(scale))?;
        let (v, m, s) = (
            self.value(value).data(),
            self.value(mean).data(),
            self.value(scale).data(),
        );
        let data = (0..v.len())
            .map(|i| {
                let p = kernels::gaussian_bin_mass(v[i].to_f64(), m[i].to_f64(), s[i].to_f64());
                T::from_f64(-p.max(floor).log2())
            })
            .collect();
        let out = Tensor::new(self.shape(value).to_vec(), data)?;
        let rg = self.rg(value) || self.rg(mean) || self.rg(scale);
        let op = Op::GaussianBits {
            value,
            mean,
            scale,
            floor,
        };
        Ok(self.push(out, op, rg))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(TensorError::NonScalarLoss(lv.shape().to_vec()));
        }
        if !lv.all_finite() {
            return Err(TensorError::NonFinite("loss"));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
                continue;
            }
            self.propagate(node, &g, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn accum<'a>(&self, grads: &'a mut [Option<Vec<T>>], v: Var) -> Option<&'a mut [T]> {
        if !self.rg(v) {
            return None;
        }
        let n = self.value(v).numel();
        Some(grads[v.0].get_or_insert_with(|| vec![T::zero(); n]).as_mut_slice())
    }

    fn propagate(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let y = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if let Some(ga) = self.accum(grads, v) {
                        ga.iter_mut().zip(g).for_each(|(d, &s)| *d += s);
                    }
                }
            }
            Op::Sub(a, b) => {
                if let Some(ga) = self.accum(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, &s)| *d += s);
                }
                if let Some(gb) = self.accum(grads, *b) {
                    gb.iter_mut().zip(g).for_each(|(d, &s)| *d -= s);
                }
            }
            Op::Mul(a, b) => {
                let (xa, xb) = (self.value(*a).data(), self.value(*b).data());
                if let Some(ga) = self.accum(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] += g[i] * xb[i];
                    }
                }
                if let Some(gb) = self.accum(grads, *b) {
                    for i in 0..g.len() {
                        gb[i] += g[i] * xa[i];
                    }
                }
            }
            Op::Scale(a, s) => {
                if let Some(ga) = self.accum(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, &v)| *d += v * *s);
                }
            }
            Op::AddScalar(a) | Op::Reshape(a) => {
                if let Some(ga) = self.accum(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, &v)| *d += v);
                }
            }
            Op::Exp(a) => {
                if let Some(ga) = self.accum(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] += g[i] * y[i];
                    }
                }
            }
            Op::Log(a) => {
                let x = self.value(*a).data();
                if let Some(ga) = self.accum(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] += g[i] / x[i];
                    }
                }
            }
            Op::Square(a) => {
                let x = self.value(*a).data();
                if let Some(ga) = self.accum(grads, *a) {
                    let two = T::from_f64(2.0);
                    for i in 0..g.len() {
                        ga[i] += g[i] * two * x[i];
                    }
                }
            }
            Op::Softplus(a) => {
                let x = self.value(*a).data();
                if let Some(ga) = self.accum(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] += g[i] * kernels::sigmoid(x[i]);
                    }
                }
            }
            Op::Gelu(a) => {
                let x = self.value(*a).data();
                if let Some(ga) = self.accum(grads, *a) {
                    for i in 0..g.len() {
                        ga[i] += g[i] * kernels::gelu_grad(x[i]);
                    }
                }
            }
            Op::Clamp(a, lo, hi) => {
                let x = self.value(*a).data();
                if let Some(ga) = self.accum(grads, *a) {
                    for i in 0..g.len() {
                        if x[i] >= *lo && x[i] <= *hi {
                            ga[i] += g[i];
                        }
                    }
                }
            }
            Op::MatMul {
                a,
                b,
                batch,
                m,
                k,
                n,
                trans_b,
            } => {
                let (m, k, n) = (*m, *k, *n);
                let xa = self.value(*a).data();
                let xb = self.value(*b).data();
                if let Some(ga) = self.accum(grads, *a) {
                    for bi in 0..*batch {
                        let gs = &g[bi * m * n..(bi + 1) * m * n];
                        let bs = &xb[bi * k * n..(bi + 1) * k * n];
                        let out = &mut ga[bi * m * k..(bi + 1) * m * k];
                        if *trans_b {
                            mm_nn(gs, bs, out, m, n, k);
                        } else {
                            mm_nt(gs, bs, out, m, n, k);
                        }
                    }
                }
                if let Some(gb) = self.accum(grads, *b) {
                    for bi in 0..*batch {
                        let gs = &g[bi * m * n..(bi + 1) * m * n];
                        let as_ = &xa[bi * m * k..(bi + 1) * m * k];
                        let out = &mut gb[bi * k * n..(bi + 1) * k * n];
                        if *trans_b {
                            mm_tn(gs, as_, out, n, m, k);
                        } else {
                            mm_tn(as_, gs, out, k, m, n);
                        }
                    }
                }
            }
            Op::Gather { src, index } => {
                if let Some(gs) = self.accum(grads, *src) {
                    for (i, &j) in index.iter().enumerate() {
                        gs[j] += g[i];
                    }
                }
            }
            Op::ExpandRows(src) => {
                if let Some(gs) = self.accum(grads, *src) {
                    let d = gs.len();
                    for row in g.chunks(d) {
                        gs.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
                    }
                }
            }
            Op::SumAll(a) => {
                if let Some(ga) = self.accum(grads, *a) {
                    let s = g[0];
                    ga.iter_mut().for_each(|d| *d += s);
                }
            }
            Op::Softmax {
                src,
                outer,
                len,
                inner,
            } => {
                if let Some(gs) = self.accum(grads, *src) {
                    for o in 0..*outer {
                        for i in 0..*inner {
                            let base = o * len * inner + i;
                            let mut dot = T::zero();
                            for j in 0..*len {
                                let p = base + j * inner;
                                dot += g[p] * y[p];
                            }
                            for j in 0..*len {
                                let p = base + j * inner;
                                gs[p] += y[p] * (g[p] - dot);
                            }
                        }
                    }
                }
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                rstd,
            } => {
                let gw = self.value(*gain).data();
                let d = gw.len();
                let rows = rstd.len();
                if let Some(gg) = self.accum(grads, *gain) {
                    for r in 0..rows {
                        for j in 0..d {
                            gg[j] += g[r * d + j] * xhat[r * d + j];
                        }
                    }
                }
                if let Some(gb) = self.accum(grads, *bias) {
                    for r in 0..rows {
                        for j in 0..d {
                            gb[j] += g[r * d + j];
                        }
                    }
                }
                if let Some(gx) = self.accum(grads, *x) {
                    let inv_d = T::one() / T::from_f64(d as f64);
                    for r in 0..rows {
                        let mut mean_dh = T::zero();
                        let mut mean_dh_h = T::zero();
                        for j in 0..d {
                            let dh = g[r * d + j] * gw[j];
                            mean_dh += dh;
                            mean_dh_h += dh * xhat[r * d + j];
                        }
                        mean_dh *= inv_d;
                        mean_dh_h *= inv_d;
                        for j in 0..d {
                            let dh = g[r * d + j] * gw[j];
                            gx[r * d + j] += rstd[r] * (dh - mean_dh - xhat[r * d + j] * mean_dh_h);
                        }
                    }
                }
            }
            Op::GaussianBits {
                value,
                mean,
                scale,
                floor,
            } => {
                let v = self.value(*value).data();
                let mu = self.value(*mean).data();
                let sc = self.value(*scale).data();
                let ln2 = std::f64::consts::LN_2;
                let mut dv = vec![0.0f64; g.len()];
                let mut ds = vec![0.0f64; g.len()];
                for i in 0..g.len() {
                    let (x, m, s) = (v[i].to_f64(), mu[i].to_f64(), sc[i].to_f64());
                    let upper = (x + 0.5 - m) / s;
                    let lower = (x - 0.5 - m) / s;
                    let p = kernels::gaussian_bin_mass(x, m, s);
                    let (pu, pl) = (kernels::normal_pdf(upper), kernels::normal_pdf(lower));
                    let dbits_dp = -1.0 / (p.max(*floor) * ln2);
                    let gi = g[i].to_f64();
                    dv[i] = gi * dbits_dp * (pu - pl) / s;
                    ds[i] = gi * dbits_dp * -(upper * pu - lower * pl) / s;
                }
                if let Some(gv) = self.accum(grads, *value) {
                    gv.iter_mut().zip(&dv).for_each(|(a, &b)| *a += T::from_f64(b));
                }
                if let Some(gm) = self.accum(grads, *mean) {
                    gm.iter_mut().zip(&dv).for_each(|(a, &b)| *a -= T::from_f64(b));
                }
                if let Some(gsc) = self.accum(grads, *scale) {
                    gsc.iter_mut().zip(&ds).for_each(|(a, &b)| *a += T::from_f64(b));
                }
            }
        }
    }

    /// Number of nodes whose op is a softmax, with their element counts.
    /// Used to audit attention cost.
    pub fn softmax_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.op, Op::Softmax { .. }))
            .map(|n| n.value.numel())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: Vec<usize>, data: Vec<f64>) -> Tensor<f64> {
        Tensor::new(shape, data).unwrap()
    }

    #[test]
    fn identity_matmul() {
        let mut g = Graph::new();
        let i = g.constant(t(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]));
        let m = g.constant(t(vec![2, 2], vec![3.0, -1.0, 2.5, 7.0]));
        let p = g.matmul(i, m).unwrap();
        assert_eq!(g.value(p).data(), g.value(m).data());
    }

    #[test]
    fn hand_matmul() {
        let mut g = Graph::new();
        let a = g.constant(t(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]));
        let b = g.constant(t(vec![2, 1], vec![1.0, 1.0]));
        let p = g.matmul(a, b).unwrap();
        assert_eq!(g.value(p).data(), &[3.0, 7.0]);
        assert_eq!(g.shape(p), &[2, 1]);
    }

    #[test]
    fn matmul_shape_mismatch() {
        let mut g = Graph::<f64>::new();
        let a = g.constant(Tensor::zeros(vec![2, 3]));
        let b = g.constant(Tensor::zeros(vec![2, 3]));
        assert!(matches!(g.matmul(a, b), Err(TensorError::Dimension { .. })));
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        let mut g = Graph::new();
        let a = g.constant(t(vec![2], vec![0.0, 0.0]));
        let s = g.softmax(a, 0).unwrap();
        assert_eq!(g.value(s).data(), &[0.5, 0.5]);
        let b = g.constant(t(vec![2], vec![1000.0, 0.0]));
        let s = g.softmax(b, 0).unwrap();
        let v = g.value(s).data();
        assert_eq!(v[0], 1.0);
        assert!(v[1] >= 0.0 && v[1] < 1e-300);
    }

    #[test]
    fn softmax_inner_axis_rows_sum_to_one() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::from_fn(vec![3, 4, 2], |i| (i as f64 * 1.3).sin() * 5.0));
        let s = g.softmax(x, 1).unwrap();
        let v = g.value(s).data();
        for o in 0..3 {
            for i in 0..2 {
                let total: f64 = (0..4).map(|j| v[o * 8 + j * 2 + i]).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn layernorm_constant_row_is_zero() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::full(vec![2, 4], 3.5f64));
        let gain = g.constant(Tensor::full(vec![4], 1.0));
        let bias = g.constant(Tensor::zeros(vec![4]));
        let y = g.layernorm(x, gain, bias, 1e-5).unwrap();
        assert!(g.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn layernorm_moments() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::from_fn(vec![5, 16], |i| ((i * 7919) % 23) as f64 - 4.0));
        let gain = g.constant(Tensor::full(vec![16], 1.0));
        let bias = g.constant(Tensor::zeros(vec![16]));
        let y = g.layernorm(x, gain, bias, 1e-5).unwrap();
        for row in g.value(y).data().chunks(16) {
            let mean: f64 = row.iter().sum::<f64>() / 16.0;
            let var: f64 = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 16.0;
            assert!(mean.abs() < 1e-5);
            assert!((var - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn sum_of_leaf_gradient_is_ones() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(vec![3, 2], |i| i as f64), true);
        let c = g.constant(Tensor::zeros(vec![3, 2]));
        let y = g.add(x, c).unwrap();
        let s = g.sum_all(y);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap(), &[1.0; 6]);
        assert!(grads.get(c).is_none());
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::<f32>::new();
        let x = g.leaf(Tensor::zeros(vec![2]), true);
        assert!(matches!(g.backward(x), Err(TensorError::NonScalarLoss(_))));
    }

    #[test]
    fn shared_node_visited_once_with_summed_gradient() {
        // y = x*x + x  => dy/dx = 2x + 1
        let mut g = Graph::new();
        let x = g.leaf(t(vec![1], vec![3.0]), true);
        let sq = g.mul(x, x).unwrap();
        let y = g.add(sq, x).unwrap();
        let s = g.sum_all(y);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap(), &[7.0]);
    }
}
