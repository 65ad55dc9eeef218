//! Recorded computation with exact reverse-mode gradients.
//!
//! Every op appends a node holding its output; [`Tape::backward`] walks the
//! nodes in reverse. The op set is the one the set network needs: fused
//! linear layers, row/column normalisation, activations, segment sums,
//! softmax-weighted pooling and a fused softmax cross-entropy.

use super::{ParamId, ParamStore, Tensor};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Linear { x: usize, w: usize, b: usize },
    Mul { a: usize, b: usize },
    Scale { x: usize, factors: Vec<T> },
    Sum { x: usize },
    Relu { x: usize },
    Elu { x: usize },
    ConcatCols { a: usize, b: usize },
    /// Normalisation with statistics computed from the input, either per row
    /// (layer norm) or per column (batch norm, training).
    Norm { x: usize, gamma: usize, beta: usize, per_row: bool, xhat: Vec<T>, inv_std: Vec<T> },
    /// Per-column normalisation with fixed statistics (batch norm, eval).
    NormFixed { x: usize, gamma: usize, beta: usize, xhat: Vec<T>, inv_std: Vec<T> },
    SegmentSum { x: usize, segment: Vec<usize> },
    DiagramPool { x: usize, logits: Option<usize>, scales: usize, weights: Vec<T> },
    SoftmaxCrossEntropy { logits: usize, labels: Vec<usize>, probs: Vec<T> },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    param: Option<ParamId>,
}

#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    buffer_updates: Vec<(ParamId, Tensor<T>)>,
}

/// Row-wise softmax of a `rows x cols` buffer.
pub fn softmax_rows<T: Scalar>(data: &[T], cols: usize) -> Vec<T> {
    let mut out = data.to_vec();
    for row in out.chunks_mut(cols) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    out
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            buffer_updates: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, what: &str, value: Tensor<T>, op: Op<T>) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("output of {what}")));
        }
        self.nodes.push(Node {
            value,
            op,
            param: None,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Result<Var> {
        self.push("input", value, Op::Leaf)
    }

    /// Records the current value of a stored parameter.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Result<Var> {
        let v = self.push(store.name(id), store.get(id).clone(), Op::Leaf)?;
        self.nodes[v.0].param = Some(id);
        Ok(v)
    }

    /// Sign of every recorded ReLU/ELU input, in recording order. Two tapes
    /// of the same graph with equal patterns lie on the same smooth piece.
    pub fn activation_pattern(&self) -> Vec<bool> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu { x } | Op::Elu { x } => Some(x),
                _ => None,
            })
            .flat_map(|x| self.nodes[x].value.data().iter().map(|&v| v > T::zero()))
            .collect()
    }

    /// Running-statistics updates produced by training-mode batch norm.
    pub fn take_buffer_updates(&mut self) -> Vec<(ParamId, Tensor<T>)> {
        std::mem::take(&mut self.buffer_updates)
    }

    pub(crate) fn queue_buffer_update(&mut self, id: ParamId, value: Tensor<T>) {
        self.buffer_updates.push((id, value));
    }

    fn shape2(&self, v: Var, what: &str) -> Result<(usize, usize)> {
        let t = self.value(v);
        match t.shape() {
            [r, c] => Ok((*r, *c)),
            s => Err(Error::arg(format!("{what}: expected a matrix, got shape {s:?}"))),
        }
    }

    /// `x W^T + b` for `x: r x in`, `W: out x in`, `b: out`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (rows, input) = self.shape2(x, "linear input")?;
        let (out, w_in) = self.shape2(w, "linear weight")?;
        if w_in != input || self.value(b).len() != out {
            return Err(Error::arg(format!(
                "linear: input width {input}, weight {out}x{w_in}, bias {}",
                self.value(b).len()
            )));
        }
        let xv = self.value(x).data();
        let wv = self.value(w).data();
        let bv = self.value(b).data();
        let mut y = vec![T::zero(); rows * out];
        for r in 0..rows {
            let xr = &xv[r * input..(r + 1) * input];
            for o in 0..out {
                y[r * out + o] = dot(xr, &wv[o * input..(o + 1) * input]) + bv[o];
            }
        }
        let value = Tensor::matrix(rows, out, y)?;
        self.push("linear", value, Op::Linear { x: x.0, w: w.0, b: b.0 })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::arg("mul: shape mismatch"));
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        let value = Tensor::new(self.value(a).shape().to_vec(), data)?;
        self.push("mul", value, Op::Mul { a: a.0, b: b.0 })
    }

    /// Elementwise product with constant factors (dropout masks).
    pub fn scale(&mut self, x: Var, factors: Vec<T>) -> Result<Var> {
        if factors.len() != self.value(x).len() {
            return Err(Error::arg("scale: factor count mismatch"));
        }
        let data = self
            .value(x)
            .data()
            .iter()
            .zip(&factors)
            .map(|(&v, &f)| v * f)
            .collect();
        let value = Tensor::new(self.value(x).shape().to_vec(), data)?;
        self.push("dropout", value, Op::Scale { x: x.0, factors })
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let total = self.value(x).data().iter().copied().sum();
        self.push("sum", Tensor::scalar(total), Op::Sum { x: x.0 })
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let data = self.value(x).data().iter().map(|&v| v.max(T::zero())).collect();
        let value = Tensor::new(self.value(x).shape().to_vec(), data)?;
        self.push("relu", value, Op::Relu { x: x.0 })
    }

    /// ELU with alpha = 1.
    pub fn elu(&mut self, x: Var) -> Result<Var> {
        let data = self
            .value(x)
            .data()
            .iter()
            .map(|&v| if v > T::zero() { v } else { v.exp_m1() })
            .collect();
        let value = Tensor::new(self.value(x).shape().to_vec(), data)?;
        self.push("elu", value, Op::Elu { x: x.0 })
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ra, ca) = self.shape2(a, "concat")?;
        let (rb, cb) = self.shape2(b, "concat")?;
        if ra != rb {
            return Err(Error::arg(format!("concat: {ra} rows vs {rb} rows")));
        }
        let mut data = Vec::with_capacity(ra * (ca + cb));
        for r in 0..ra {
            data.extend_from_slice(self.value(a).row(r));
            data.extend_from_slice(self.value(b).row(r));
        }
        let value = Tensor::matrix(ra, ca + cb, data)?;
        self.push("concat", value, Op::ConcatCols { a: a.0, b: b.0 })
    }

    fn check_affine(&self, x: Var, gamma: Var, beta: Var) -> Result<(usize, usize)> {
        let (rows, cols) = self.shape2(x, "norm")?;
        if self.value(gamma).len() != cols || self.value(beta).len() != cols {
            return Err(Error::arg("norm: scale/shift width mismatch"));
        }
        Ok((rows, cols))
    }

    /// Normalises each row (`per_row`) or each column to zero mean and unit
    /// variance, then applies the per-column affine `gamma * xhat + beta`.
    /// Returns the output and the per-group means and (biased) variances.
    pub fn norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        per_row: bool,
        eps: T,
    ) -> Result<(Var, Vec<T>, Vec<T>)> {
        let (rows, cols) = self.check_affine(x, gamma, beta)?;
        let xv = self.value(x).data();
        let (groups, size) = if per_row { (rows, cols) } else { (cols, rows) };
        let idx = |g: usize, j: usize| if per_row { g * cols + j } else { j * cols + g };
        let n = T::from_usize_lossy(size.max(1));
        let mut means = vec![T::zero(); groups];
        let mut vars = vec![T::zero(); groups];
        let mut inv_std = vec![T::zero(); groups];
        let mut xhat = vec![T::zero(); rows * cols];
        for g in 0..groups {
            let mean = (0..size).map(|j| xv[idx(g, j)]).sum::<T>() / n;
            let var = (0..size)
                .map(|j| {
                    let d = xv[idx(g, j)] - mean;
                    d * d
                })
                .sum::<T>()
                / n;
            let s = (var + eps).sqrt().recip();
            for j in 0..size {
                xhat[idx(g, j)] = (xv[idx(g, j)] - mean) * s;
            }
            means[g] = mean;
            vars[g] = var;
            inv_std[g] = s;
        }
        let value = self.affine(&xhat, rows, cols, gamma, beta)?;
        let op = Op::Norm {
            x: x.0,
            gamma: gamma.0,
            beta: beta.0,
            per_row,
            xhat,
            inv_std,
        };
        let v = self.push(if per_row { "layer norm" } else { "batch norm" }, value, op)?;
        Ok((v, means, vars))
    }

    /// Per-column normalisation with fixed mean and variance.
    pub fn norm_fixed(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: &[T],
        var: &[T],
        eps: T,
    ) -> Result<Var> {
        let (rows, cols) = self.check_affine(x, gamma, beta)?;
        if mean.len() != cols || var.len() != cols {
            return Err(Error::arg("norm: running statistics width mismatch"));
        }
        let inv_std: Vec<T> = var.iter().map(|&v| (v + eps).sqrt().recip()).collect();
        let xv = self.value(x).data();
        let mut xhat = vec![T::zero(); rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                xhat[r * cols + c] = (xv[r * cols + c] - mean[c]) * inv_std[c];
            }
        }
        let value = self.affine(&xhat, rows, cols, gamma, beta)?;
        let op = Op::NormFixed {
            x: x.0,
            gamma: gamma.0,
            beta: beta.0,
            xhat,
            inv_std,
        };
        self.push("batch norm", value, op)
    }

    fn affine(&self, xhat: &[T], rows: usize, cols: usize, gamma: Var, beta: Var) -> Result<Tensor<T>> {
        let gv = self.value(gamma).data();
        let bv = self.value(beta).data();
        let mut y = vec![T::zero(); rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                y[r * cols + c] = gv[c] * xhat[r * cols + c] + bv[c];
            }
        }
        Tensor::matrix(rows, cols, y)
    }

    /// Sums the rows of `x` into `count` groups; row `r` goes to
    /// `segment[r]`. Empty groups are zero rows. Rows are added in index
    /// order.
    pub fn segment_sum(&mut self, x: Var, segment: Vec<usize>, count: usize) -> Result<Var> {
        let (rows, cols) = self.shape2(x, "segment sum")?;
        if segment.len() != rows || segment.iter().any(|&s| s >= count) {
            return Err(Error::arg("segment sum: bad segment ids"));
        }
        let mut out = vec![T::zero(); count * cols];
        for (r, &s) in segment.iter().enumerate() {
            axpy(T::one(), self.value(x).row(r), &mut out[s * cols..(s + 1) * cols]);
        }
        let value = Tensor::matrix(count, cols, out)?;
        self.push("segment sum", value, Op::SegmentSum { x: x.0, segment })
    }

    /// Pools consecutive groups of `scales` rows with weights
    /// `softmax(logits)`, or uniformly when `logits` is `None`.
    pub fn diagram_pool(&mut self, x: Var, scales: usize, logits: Option<Var>) -> Result<Var> {
        let (rows, cols) = self.shape2(x, "diagram pool")?;
        if scales == 0 || rows % scales != 0 {
            return Err(Error::arg(format!("diagram pool: {rows} rows for K = {scales}")));
        }
        let weights = match logits {
            Some(w) => {
                if self.value(w).len() != scales {
                    return Err(Error::arg("diagram pool: logit count differs from K"));
                }
                softmax_rows(self.value(w).data(), scales)
            }
            None => vec![T::from_usize_lossy(scales).recip(); scales],
        };
        let batch = rows / scales;
        let mut out = vec![T::zero(); batch * cols];
        for b in 0..batch {
            for (k, &wk) in weights.iter().enumerate() {
                axpy(wk, self.value(x).row(b * scales + k), &mut out[b * cols..(b + 1) * cols]);
            }
        }
        let value = Tensor::matrix(batch, cols, out)?;
        let op = Op::DiagramPool {
            x: x.0,
            logits: logits.map(|v| v.0),
            scales,
            weights,
        };
        self.push("diagram pool", value, op)
    }

    /// Mean negative log-likelihood of `labels` under `softmax(logits)`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let (rows, cols) = self.shape2(logits, "cross entropy")?;
        if labels.len() != rows {
            return Err(Error::arg("cross entropy: label count differs from batch"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= cols) {
            return Err(Error::arg(format!("label {bad} >= number of classes {cols}")));
        }
        let z = self.value(logits).data();
        let mut total = T::zero();
        for (r, &y) in labels.iter().enumerate() {
            let row = &z[r * cols..(r + 1) * cols];
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
            total += lse - row[y];
        }
        let probs = softmax_rows(z, cols);
        let loss = total / T::from_usize_lossy(rows.max(1));
        let op = Op::SoftmaxCrossEntropy {
            logits: logits.0,
            labels: labels.to_vec(),
            probs,
        };
        self.push("cross entropy", Tensor::scalar(loss), op)
    }

    /// Gradients of the scalar `loss` with respect to every recorded node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            return Err(Error::State("backward called before a forward pass".into()));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::State("backward needs a scalar loss".into()));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(i, &g, &mut grads);
            grads[i] = Some(g);
        }

        let mut params: Vec<Option<Tensor<T>>> = Vec::new();
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (node, g) in self.nodes.iter().zip(grads) {
            let g = g.map(|g| Tensor::new(node.value.shape().to_vec(), g).expect("grad shape"));
            if let (Some(id), Some(g)) = (node.param, g.as_ref()) {
                if params.len() <= id.0 {
                    params.resize(id.0 + 1, None);
                }
                match &mut params[id.0] {
                    Some(acc) => axpy(T::one(), g.data(), acc.data_mut()),
                    slot => *slot = Some(g.clone()),
                }
            }
            nodes.push(g);
        }
        for (i, p) in params.iter().enumerate() {
            if let Some(p) = p {
                if !p.is_finite() {
                    return Err(Error::NonFinite(format!("gradient of parameter #{i}")));
                }
            }
        }
        Ok(Gradients { nodes, params })
    }

    fn backprop_node(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[i];
        let mut acc = |target: usize, f: &mut dyn FnMut(&mut [T])| {
            let len = self.nodes[target].value.len();
            let buf = grads[target].get_or_insert_with(|| vec![T::zero(); len]);
            f(buf);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Linear { x, w, b } => {
                let xv = &self.nodes[*x].value;
                let wv = &self.nodes[*w].value;
                let (rows, input) = (xv.rows(), xv.cols());
                let out = wv.rows();
                acc(*x, &mut |dx| {
                    for r in 0..rows {
                        let dxr = &mut dx[r * input..(r + 1) * input];
                        for o in 0..out {
                            let gy = g[r * out + o];
                            if gy != T::zero() {
                                axpy(gy, wv.row(o), dxr);
                            }
                        }
                    }
                });
                acc(*w, &mut |dw| {
                    for r in 0..rows {
                        let xr = xv.row(r);
                        for o in 0..out {
                            let gy = g[r * out + o];
                            if gy != T::zero() {
                                axpy(gy, xr, &mut dw[o * input..(o + 1) * input]);
                            }
                        }
                    }
                });
                acc(*b, &mut |db| {
                    for r in 0..rows {
                        axpy(T::one(), &g[r * out..(r + 1) * out], db);
                    }
                });
            }
            Op::Mul { a, b } => {
                let av = self.nodes[*a].value.data();
                let bv = self.nodes[*b].value.data();
                acc(*a, &mut |da| {
                    for ((d, &gi), &y) in da.iter_mut().zip(g).zip(bv) {
                        *d += gi * y;
                    }
                });
                acc(*b, &mut |db| {
                    for ((d, &gi), &x) in db.iter_mut().zip(g).zip(av) {
                        *d += gi * x;
                    }
                });
            }
            Op::Scale { x, factors } => acc(*x, &mut |dx| {
                for ((d, &gi), &f) in dx.iter_mut().zip(g).zip(factors) {
                    *d += gi * f;
                }
            }),
            Op::Sum { x } => acc(*x, &mut |dx| {
                for d in dx.iter_mut() {
                    *d += g[0];
                }
            }),
            Op::Relu { x } => {
                let xv = self.nodes[*x].value.data();
                acc(*x, &mut |dx| {
                    for ((d, &gi), &v) in dx.iter_mut().zip(g).zip(xv) {
                        if v > T::zero() {
                            *d += gi;
                        }
                    }
                });
            }
            Op::Elu { x } => {
                let xv = self.nodes[*x].value.data();
                let yv = node.value.data();
                acc(*x, &mut |dx| {
                    for (((d, &gi), &v), &y) in dx.iter_mut().zip(g).zip(xv).zip(yv) {
                        *d += if v > T::zero() { gi } else { gi * (y + T::one()) };
                    }
                });
            }
            Op::ConcatCols { a, b } => {
                let ca = self.nodes[*a].value.cols();
                let cb = self.nodes[*b].value.cols();
                let rows = node.value.rows();
                let width = ca + cb;
                acc(*a, &mut |da| {
                    for r in 0..rows {
                        axpy(T::one(), &g[r * width..r * width + ca], &mut da[r * ca..(r + 1) * ca]);
                    }
                });
                acc(*b, &mut |db| {
                    for r in 0..rows {
                        axpy(T::one(), &g[r * width + ca..(r + 1) * width], &mut db[r * cb..(r + 1) * cb]);
                    }
                });
            }
            Op::Norm { x, gamma, beta, per_row, xhat, inv_std } => {
                let (rows, cols) = (node.value.rows(), node.value.cols());
                let gv = self.nodes[*gamma].value.data();
                let (groups, size) = if *per_row { (rows, cols) } else { (cols, rows) };
                let idx = |grp: usize, j: usize| if *per_row { grp * cols + j } else { j * cols + grp };
                let col_of = |grp: usize, j: usize| if *per_row { j } else { grp };
                let n = T::from_usize_lossy(size.max(1));
                acc(*x, &mut |dx| {
                    for grp in 0..groups {
                        let mut mean_g = T::zero();
                        let mut mean_gx = T::zero();
                        for j in 0..size {
                            let k = idx(grp, j);
                            let gh = g[k] * gv[col_of(grp, j)];
                            mean_g += gh;
                            mean_gx += gh * xhat[k];
                        }
                        mean_g /= n;
                        mean_gx /= n;
                        for j in 0..size {
                            let k = idx(grp, j);
                            let gh = g[k] * gv[col_of(grp, j)];
                            dx[k] += inv_std[grp] * (gh - mean_g - xhat[k] * mean_gx);
                        }
                    }
                });
                self.affine_grads(g, xhat, rows, cols, *gamma, *beta, &mut acc);
            }
            Op::NormFixed { x, gamma, beta, xhat, inv_std } => {
                let (rows, cols) = (node.value.rows(), node.value.cols());
                let gv = self.nodes[*gamma].value.data();
                acc(*x, &mut |dx| {
                    for r in 0..rows {
                        for c in 0..cols {
                            dx[r * cols + c] += g[r * cols + c] * gv[c] * inv_std[c];
                        }
                    }
                });
                self.affine_grads(g, xhat, rows, cols, *gamma, *beta, &mut acc);
            }
            Op::SegmentSum { x, segment } => {
                let cols = node.value.cols();
                acc(*x, &mut |dx| {
                    for (r, &s) in segment.iter().enumerate() {
                        axpy(T::one(), &g[s * cols..(s + 1) * cols], &mut dx[r * cols..(r + 1) * cols]);
                    }
                });
            }
            Op::DiagramPool { x, logits, scales, weights } => {
                let cols = node.value.cols();
                let batch = node.value.rows();
                let xv = &self.nodes[*x].value;
                acc(*x, &mut |dx| {
                    for b in 0..batch {
                        for (k, &wk) in weights.iter().enumerate() {
                            let r = b * scales + k;
                            axpy(wk, &g[b * cols..(b + 1) * cols], &mut dx[r * cols..(r + 1) * cols]);
                        }
                    }
                });
                if let Some(l) = logits {
                    let mut gw = vec![T::zero(); *scales];
                    for b in 0..batch {
                        for (k, gk) in gw.iter_mut().enumerate() {
                            *gk += dot(&g[b * cols..(b + 1) * cols], xv.row(b * scales + k));
                        }
                    }
                    let mean: T = weights.iter().zip(&gw).map(|(&w, &v)| w * v).sum();
                    acc(*l, &mut |dl| {
                        for ((d, &w), &v) in dl.iter_mut().zip(weights).zip(&gw) {
                            *d += w * (v - mean);
                        }
                    });
                }
            }
            Op::SoftmaxCrossEntropy { logits, labels, probs } => {
                let cols = self.nodes[*logits].value.cols();
                let scale = g[0] / T::from_usize_lossy(labels.len().max(1));
                acc(*logits, &mut |dz| {
                    for (r, &y) in labels.iter().enumerate() {
                        for c in 0..cols {
                            let target = if c == y { T::one() } else { T::zero() };
                            dz[r * cols + c] += scale * (probs[r * cols + c] - target);
                        }
                    }
                });
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn affine_grads(
        &self,
        g: &[T],
        xhat: &[T],
        rows: usize,
        cols: usize,
        gamma: usize,
        beta: usize,
        acc: &mut impl FnMut(usize, &mut dyn FnMut(&mut [T])),
    ) {
        acc(gamma, &mut |dg| {
            for r in 0..rows {
                for c in 0..cols {
                    dg[c] += g[r * cols + c] * xhat[r * cols + c];
                }
            }
        });
        acc(beta, &mut |db| {
            for r in 0..rows {
                axpy(T::one(), &g[r * cols..(r + 1) * cols], db);
            }
        });
    }
}

/// Result of [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients<T> {
    nodes: Vec<Option<Tensor<T>>>,
    params: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Wraps externally computed parameter gradients, indexed by `ParamId`.
    pub fn from_params(params: Vec<Option<Tensor<T>>>) -> Self {
        Gradients {
            nodes: Vec::new(),
            params,
        }
    }

    /// Gradient with respect to a recorded node; `None` if the loss does not
    /// depend on it.
    pub fn wrt(&self, v: Var) -> Option<&Tensor<T>> {
        self.nodes.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient with respect to a stored parameter, summed over every use.
    pub fn param(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.params.get(id.0).and_then(Option::as_ref)
    }
}
