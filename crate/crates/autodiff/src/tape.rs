//! Define-by-run tape.
//!
//! Every op appends a node holding its forward value. Nodes are appended in
//! evaluation order, so the tape is already topologically sorted and
//! [`Tape::backward`] is a single reverse sweep. A tape is rebuilt for every
//! forward pass and may be differentiated exactly once.

use std::rc::Rc;

use rand::Rng;

use crate::error::{AutodiffError, Result};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise nonlinearities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Relu,
    Elu,
    LeakyRelu(f64),
    Sigmoid,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Rc<SparseMatrix>, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    MulConst(Var, Rc<Tensor>),
    Act(Var, Activation),
    Exp(Var),
    LogSigmoid(Var),
    LogSoftmaxRows(Var),
    Sum(Var),
    SumCols(Var),
    GatherRows(Var, Rc<Vec<usize>>),
    PickElements(Var, Rc<Vec<(usize, usize)>>),
    ConcatCols(Vec<Var>),
    SegmentSoftmax(Var, Rc<Vec<usize>>),
    EdgeAggregate {
        alpha: Var,
        h: Var,
        src: Rc<Vec<usize>>,
        dst: Rc<Vec<usize>>,
    },
    ReplaceRows(Var, Rc<Vec<bool>>),
    Transpose(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Gradients of a scalar with respect to every node of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `None` when the node does not influence the loss.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    differentiated: bool,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> AutodiffError {
    AutodiffError::Shape {
        op,
        left: a.shape(),
        right: b.shape(),
    }
}

fn check_indices(op: &'static str, idx: &[usize], len: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= len) {
        Some(&index) => Err(AutodiffError::Index { op, index, len }),
        None => Ok(()),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// A leaf that receives a gradient.
    pub fn variable(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf treated as constant: no gradient is computed for it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn param(&mut self, p: &Parameter) -> Var {
        self.push(p.value.clone(), Op::Leaf, p.trainable)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::MatMul(a, b), ng))
    }

    /// `s · x` for a constant sparse `s`.
    pub fn sparse_matmul(&mut self, s: Rc<SparseMatrix>, x: Var) -> Result<Var> {
        let value = s.matmul_dense(self.value(x))?;
        let ng = self.ng(x);
        Ok(self.push(value, Op::SpMM(s, x), ng))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(op, ta, tb));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Sub(a, b), ng))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Mul(a, b), ng))
    }

    /// Adds the `1 x c` row `b` to every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        if tb.rows() != 1 || tb.cols() != tx.cols() {
            return Err(shape_err("add_row", tx, tb));
        }
        let mut value = tx.clone();
        for i in 0..value.rows() {
            for (o, &v) in value.row_mut(i).iter_mut().zip(tb.data()) {
                *o += v;
            }
        }
        let ng = self.ng(x) || self.ng(b);
        Ok(self.push(value, Op::AddRow(x, b), ng))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let value = self.value(x).map(|v| v * c);
        let ng = self.ng(x);
        self.push(value, Op::Scale(x, c), ng)
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.scale(x, -1.0)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let value = self.value(x).map(|v| v + c);
        let ng = self.ng(x);
        self.push(value, Op::AddScalar(x), ng)
    }

    /// Elementwise product with a constant tensor of the same shape.
    pub fn mul_const(&mut self, x: Var, c: Rc<Tensor>) -> Result<Var> {
        let tx = self.value(x);
        if tx.shape() != c.shape() {
            return Err(shape_err("mul_const", tx, &c));
        }
        let value = tx.zip_map(&c, |a, b| a * b);
        let ng = self.ng(x);
        Ok(self.push(value, Op::MulConst(x, c), ng))
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Result<Var> {
        if let Activation::LeakyRelu(slope) = kind {
            if !slope.is_finite() {
                return Err(AutodiffError::Config(format!(
                    "leaky_relu slope must be finite, got {slope}"
                )));
            }
        }
        let value = self.value(x).map(|v| activate(kind, v));
        let ng = self.ng(x);
        Ok(self.push(value, Op::Act(x, kind), ng))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Relu).expect("relu has no config")
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let value = self.value(x).map(f64::exp);
        let ng = self.ng(x);
        self.push(value, Op::Exp(x), ng)
    }

    /// `log σ(x)`, evaluated without overflow for large `|x|`.
    pub fn log_sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).map(log_sigmoid);
        let ng = self.ng(x);
        self.push(value, Op::LogSigmoid(x), ng)
    }

    /// Row-wise `log softmax`, stabilised by subtracting the row maximum.
    pub fn log_softmax_rows(&mut self, x: Var) -> Result<Var> {
        let tx = self.value(x);
        if tx.cols() == 0 {
            return Err(AutodiffError::Contract(
                "log_softmax needs at least one column".into(),
            ));
        }
        if !tx.is_finite() {
            return Err(AutodiffError::NonFinite("log_softmax_rows"));
        }
        let mut value = tx.clone();
        for i in 0..value.rows() {
            let row = value.row_mut(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        let ng = self.ng(x);
        Ok(self.push(value, Op::LogSoftmaxRows(x), ng))
    }

    /// Sum of all entries, as a `1 x 1` tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).sum());
        let ng = self.ng(x);
        self.push(value, Op::Sum(x), ng)
    }

    /// Per-row sum, `n x c -> n x 1`.
    pub fn sum_cols(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let value = Tensor::from_fn(tx.rows(), 1, |i, _| tx.row(i).iter().sum());
        let ng = self.ng(x);
        self.push(value, Op::SumCols(x), ng)
    }

    /// Output row `k` is input row `idx[k]`.
    pub fn gather_rows(&mut self, x: Var, idx: Rc<Vec<usize>>) -> Result<Var> {
        let tx = self.value(x);
        check_indices("gather_rows", &idx, tx.rows())?;
        let c = tx.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx.iter() {
            data.extend_from_slice(tx.row(i));
        }
        let value = Tensor::from_vec(idx.len(), c, data)?;
        let ng = self.ng(x);
        Ok(self.push(value, Op::GatherRows(x, idx), ng))
    }

    /// Output `k x 1` holds `x[r_k, c_k]`.
    pub fn pick_elements(&mut self, x: Var, at: Rc<Vec<(usize, usize)>>) -> Result<Var> {
        let tx = self.value(x);
        for &(r, c) in at.iter() {
            check_indices("pick_elements", &[r], tx.rows())?;
            check_indices("pick_elements", &[c], tx.cols())?;
        }
        let value = Tensor::from_fn(at.len(), 1, |k, _| {
            let (r, c) = at[k];
            tx.get(r, c)
        });
        let ng = self.ng(x);
        Ok(self.push(value, Op::PickElements(x, at), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| AutodiffError::Contract("concat of zero tensors".into()))?;
        let n = self.value(first).rows();
        for &p in parts {
            if self.value(p).rows() != n {
                return Err(shape_err("concat_cols", self.value(first), self.value(p)));
            }
        }
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut value = Tensor::zeros(n, total);
        for i in 0..n {
            let mut off = 0;
            for &p in parts {
                let src = self.value(p).row(i);
                value.row_mut(i)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), ng))
    }

    /// Softmax of an `E x 1` score column within groups sharing `seg[e]`.
    pub fn segment_softmax(&mut self, scores: Var, seg: Rc<Vec<usize>>, n: usize) -> Result<Var> {
        let ts = self.value(scores);
        if ts.cols() != 1 || ts.rows() != seg.len() {
            return Err(AutodiffError::Shape {
                op: "segment_softmax",
                left: ts.shape(),
                right: (seg.len(), 1),
            });
        }
        check_indices("segment_softmax", &seg, n)?;
        let mut max = vec![f64::NEG_INFINITY; n];
        for (e, &s) in seg.iter().enumerate() {
            max[s] = max[s].max(ts.data()[e]);
        }
        let mut denom = vec![0.0; n];
        let mut out: Vec<f64> = Vec::with_capacity(seg.len());
        for (e, &s) in seg.iter().enumerate() {
            let v = (ts.data()[e] - max[s]).exp();
            denom[s] += v;
            out.push(v);
        }
        for (e, &s) in seg.iter().enumerate() {
            out[e] /= denom[s];
        }
        let value = Tensor::from_vec(seg.len(), 1, out)?;
        let ng = self.ng(scores);
        Ok(self.push(value, Op::SegmentSoftmax(scores, seg), ng))
    }

    /// `out[dst[e]] += alpha[e] * h[src[e]]` over all edges.
    pub fn edge_aggregate(
        &mut self,
        alpha: Var,
        h: Var,
        src: Rc<Vec<usize>>,
        dst: Rc<Vec<usize>>,
    ) -> Result<Var> {
        let (ta, th) = (self.value(alpha), self.value(h));
        if ta.cols() != 1 || ta.rows() != src.len() || src.len() != dst.len() {
            return Err(shape_err("edge_aggregate", ta, th));
        }
        let n = th.rows();
        check_indices("edge_aggregate", &src, n)?;
        check_indices("edge_aggregate", &dst, n)?;
        let mut value = Tensor::zeros(n, th.cols());
        for e in 0..src.len() {
            let a = ta.data()[e];
            let (s, d) = (src[e], dst[e]);
            for (o, &v) in value.row_mut(d).iter_mut().zip(th.row(s)) {
                *o += a * v;
            }
        }
        let ng = self.ng(alpha) || self.ng(h);
        Ok(self.push(value, Op::EdgeAggregate { alpha, h, src, dst }, ng))
    }

    /// Rows flagged in `mask` are replaced by the rows of `replacement`; only
    /// the unflagged rows pass gradient back to `x`.
    pub fn replace_rows(&mut self, x: Var, mask: Rc<Vec<bool>>, replacement: &Tensor) -> Result<Var> {
        let tx = self.value(x);
        if tx.shape() != replacement.shape() || mask.len() != tx.rows() {
            return Err(shape_err("replace_rows", tx, replacement));
        }
        let mut value = tx.clone();
        for (i, &m) in mask.iter().enumerate() {
            if m {
                value.row_mut(i).copy_from_slice(replacement.row(i));
            }
        }
        let ng = self.ng(x);
        Ok(self.push(value, Op::ReplaceRows(x, mask), ng))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let value = self.value(x).transpose();
        let ng = self.ng(x);
        self.push(value, Op::Transpose(x), ng)
    }

    /// Inverted dropout: survivors are scaled by `1/(1-rate)`.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        x: Var,
        rate: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        check_rate(rate)?;
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let (r, c) = self.value(x).shape();
        let keep = 1.0 / (1.0 - rate);
        let mask = Tensor::from_fn(r, c, |_, _| if rng.random::<f64>() < rate { 0.0 } else { keep });
        self.mul_const(x, Rc::new(mask))
    }

    /// Reverse sweep from a `1 x 1` root.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.differentiated {
            return Err(AutodiffError::Contract(
                "backward already ran on this tape; build a new tape per pass".into(),
            ));
        }
        let root = &self.nodes[loss.0].value;
        if root.shape() != (1, 1) {
            return Err(AutodiffError::Contract(format!(
                "backward root must be 1x1, got {:?}",
                root.shape()
            )));
        }
        self.differentiated = true;

        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                grads[idx] = Some(g);
                continue;
            }
            let acc = |v: Var, delta: Tensor, grads: &mut Vec<Option<Tensor>>| {
                if !self.nodes[v.0].needs_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => existing.add_assign(&delta),
                    slot => *slot = Some(delta),
                }
            };
            let val = |v: Var| &self.nodes[v.0].value;
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if self.nodes[a.0].needs_grad {
                        acc(*a, g.matmul_nt(val(*b))?, &mut grads);
                    }
                    if self.nodes[b.0].needs_grad {
                        acc(*b, val(*a).matmul_tn(&g)?, &mut grads);
                    }
                }
                Op::SpMM(s, x) => acc(*x, s.transpose_matmul_dense(&g)?, &mut grads),
                Op::Add(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g.clone(), &mut grads);
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g.map(|v| -v), &mut grads);
                }
                Op::Mul(a, b) => {
                    acc(*a, g.zip_map(val(*b), |x, y| x * y), &mut grads);
                    acc(*b, g.zip_map(val(*a), |x, y| x * y), &mut grads);
                }
                Op::AddRow(x, b) => {
                    let mut gb = Tensor::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (o, &v) in gb.data_mut().iter_mut().zip(g.row(i)) {
                            *o += v;
                        }
                    }
                    acc(*b, gb, &mut grads);
                    acc(*x, g.clone(), &mut grads);
                }
                Op::Scale(x, c) => acc(*x, g.map(|v| v * c), &mut grads),
                Op::AddScalar(x) => acc(*x, g.clone(), &mut grads),
                Op::MulConst(x, c) => acc(*x, g.zip_map(c, |a, b| a * b), &mut grads),
                Op::Act(x, kind) => {
                    let d = val(*x).zip_map(&node.value, |xi, yi| activation_grad(*kind, xi, yi));
                    acc(*x, g.zip_map(&d, |a, b| a * b), &mut grads);
                }
                Op::Exp(x) => acc(*x, g.zip_map(&node.value, |a, y| a * y), &mut grads),
                Op::LogSigmoid(x) => {
                    // d/dx log σ(x) = σ(-x)
                    acc(*x, g.zip_map(val(*x), |a, xi| a * sigmoid(-xi)), &mut grads)
                }
                Op::LogSoftmaxRows(x) => {
                    let y = &node.value;
                    let mut dx = g.clone();
                    for i in 0..y.rows() {
                        let gs: f64 = g.row(i).iter().sum();
                        for (d, &yi) in dx.row_mut(i).iter_mut().zip(y.row(i)) {
                            *d -= yi.exp() * gs;
                        }
                    }
                    acc(*x, dx, &mut grads);
                }
                Op::Sum(x) => {
                    let (r, c) = val(*x).shape();
                    acc(*x, Tensor::full(r, c, g.item()), &mut grads);
                }
                Op::SumCols(x) => {
                    let (r, c) = val(*x).shape();
                    acc(*x, Tensor::from_fn(r, c, |i, _| g.get(i, 0)), &mut grads);
                }
                Op::GatherRows(x, idx) => {
                    let (r, c) = val(*x).shape();
                    let mut dx = Tensor::zeros(r, c);
                    for (k, &i) in idx.iter().enumerate() {
                        for (o, &v) in dx.row_mut(i).iter_mut().zip(g.row(k)) {
                            *o += v;
                        }
                    }
                    acc(*x, dx, &mut grads);
                }
                Op::PickElements(x, at) => {
                    let (r, c) = val(*x).shape();
                    let mut dx = Tensor::zeros(r, c);
                    for (k, &(i, j)) in at.iter().enumerate() {
                        dx.set(i, j, dx.get(i, j) + g.get(k, 0));
                    }
                    acc(*x, dx, &mut grads);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let c = val(p).cols();
                        let part = Tensor::from_fn(g.rows(), c, |i, j| g.get(i, off + j));
                        acc(p, part, &mut grads);
                        off += c;
                    }
                }
                Op::SegmentSoftmax(x, seg) => {
                    let y = node.value.data();
                    let n = seg.iter().copied().max().map_or(0, |m| m + 1);
                    let mut dot = vec![0.0; n];
                    for (e, &s) in seg.iter().enumerate() {
                        dot[s] += y[e] * g.data()[e];
                    }
                    let dx = Tensor::from_fn(seg.len(), 1, |e, _| {
                        y[e] * (g.data()[e] - dot[seg[e]])
                    });
                    acc(*x, dx, &mut grads);
                }
                Op::EdgeAggregate { alpha, h, src, dst } => {
                    let (ta, th) = (val(*alpha), val(*h));
                    if self.nodes[alpha.0].needs_grad {
                        let da = Tensor::from_fn(src.len(), 1, |e, _| {
                            g.row(dst[e]).iter().zip(th.row(src[e])).map(|(a, b)| a * b).sum()
                        });
                        acc(*alpha, da, &mut grads);
                    }
                    if self.nodes[h.0].needs_grad {
                        let mut dh = Tensor::zeros(th.rows(), th.cols());
                        for e in 0..src.len() {
                            let a = ta.data()[e];
                            let gd = g.row(dst[e]);
                            for (o, &v) in dh.row_mut(src[e]).iter_mut().zip(gd) {
                                *o += a * v;
                            }
                        }
                        acc(*h, dh, &mut grads);
                    }
                }
                Op::Transpose(x) => acc(*x, g.transpose(), &mut grads),
                Op::ReplaceRows(x, mask) => {
                    let mut dx = g.clone();
                    for (i, &m) in mask.iter().enumerate() {
                        if m {
                            dx.row_mut(i).fill(0.0);
                        }
                    }
                    acc(*x, dx, &mut grads);
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

/// A named tensor owned outside the tape.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub trainable: bool,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        Self {
            name: name.into(),
            value,
            trainable: true,
        }
    }

    pub fn frozen(name: impl Into<String>, value: Tensor) -> Self {
        Self {
            trainable: false,
            ..Self::new(name, value)
        }
    }
}

pub fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(AutodiffError::Config(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

/// Dropout over the stored entries of a constant sparse matrix.
pub fn sparse_dropout<R: Rng + ?Sized>(
    s: &SparseMatrix,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<SparseMatrix> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(s.clone());
    }
    let keep = 1.0 / (1.0 - rate);
    let values = s
        .values()
        .iter()
        .map(|&v| if rng.random::<f64>() < rate { 0.0 } else { v * keep })
        .collect();
    Ok(s.with_values(values))
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn activate(kind: Activation, x: f64) -> f64 {
    match kind {
        Activation::Relu => x.max(0.0),
        Activation::Elu => {
            if x > 0.0 {
                x
            } else {
                x.exp_m1()
            }
        }
        Activation::LeakyRelu(slope) => {
            if x > 0.0 {
                x
            } else {
                slope * x
            }
        }
        Activation::Sigmoid => sigmoid(x),
    }
}

// Kinks take the left derivative, so relu'(0) = 0.
fn activation_grad(kind: Activation, x: f64, y: f64) -> f64 {
    match kind {
        Activation::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Elu => {
            if x > 0.0 {
                1.0
            } else {
                y + 1.0
            }
        }
        Activation::LeakyRelu(slope) => {
            if x > 0.0 {
                1.0
            } else {
                slope
            }
        }
        Activation::Sigmoid => y * (1.0 - y),
    }
}
