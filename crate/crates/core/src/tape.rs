//! A minimal reverse-mode tape over a fixed operation set.
//!
//! The model architecture is static, so there is no general computation
//! graph: just the handful of matrix operations the forward pass needs,
//! each knowing how to push gradients to its parents (reverse sweep) and
//! how to propagate tangents (forward sweep, for Jacobian-vector products).
//! All values are dense n×d matrices; vectors travel as n×1.

use ndarray::Array2;
use rand::Rng;

use crate::error::{CoreError, Result};

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    /// Leaf with no gradient (data, basis matrices, detached values).
    Constant,
    /// Leaf that accumulates a gradient.
    Param,
    /// `A · B`
    MatMul(NodeId, NodeId),
    /// `A + c·B`
    AddScaled(NodeId, NodeId, f64),
    /// Elementwise `max(0, A)`; subgradient at 0 taken as 0.
    Relu(NodeId),
    /// Elementwise multiply by a stored inverted-dropout mask
    /// (entries 0 or 1/(1-p)).
    Dropout(NodeId, Array2<f64>),
    /// `diag(scale) · A` where `scale` is an n×1 node.
    RowScale { data: NodeId, scale: NodeId },
    /// Mean softmax cross-entropy of selected rows against labels,
    /// optionally clipping logits to [-b, b] first. Output is 1×1.
    SoftmaxCrossEntropy {
        logits: NodeId,
        labels: Vec<usize>,
        rows: Vec<usize>,
        clip: Option<f64>,
    },
    /// `‖A‖_F² / denom` for a fixed positive denominator. Output is 1×1.
    SquaredFrobeniusRatio { num: NodeId, denom: f64 },
}

struct Node {
    op: Op,
    value: Array2<f64>,
    requires_grad: bool,
}

/// Recorded forward pass. Values are immutable once pushed; backward and
/// tangent sweeps can run any number of times against the same tape.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id].value
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id].value.dim(), (1, 1));
        self.nodes[id].value[(0, 0)]
    }

    fn push(&mut self, op: Op, value: Array2<f64>, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        self.nodes.len() - 1
    }

    fn needs_grad(&self, id: NodeId) -> bool {
        self.nodes[id].requires_grad
    }

    pub fn constant(&mut self, value: Array2<f64>) -> NodeId {
        self.push(Op::Constant, value, false)
    }

    pub fn param(&mut self, value: Array2<f64>) -> NodeId {
        self.push(Op::Param, value, true)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.nodes[a].value.dim();
        let (br, bc) = self.nodes[b].value.dim();
        if ac != br {
            return Err(CoreError::ShapeMismatch {
                context: "matmul",
                lhs: (ar, ac),
                rhs: (br, bc),
            });
        }
        let value = self.nodes[a].value.dot(&self.nodes[b].value);
        let rg = self.needs_grad(a) || self.needs_grad(b);
        Ok(self.push(Op::MatMul(a, b), value, rg))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.add_scaled(a, b, 1.0)
    }

    pub fn add_scaled(&mut self, a: NodeId, b: NodeId, c: f64) -> Result<NodeId> {
        if self.nodes[a].value.dim() != self.nodes[b].value.dim() {
            return Err(CoreError::ShapeMismatch {
                context: "add",
                lhs: self.nodes[a].value.dim(),
                rhs: self.nodes[b].value.dim(),
            });
        }
        let value = &self.nodes[a].value + &(c * &self.nodes[b].value);
        let rg = self.needs_grad(a) || self.needs_grad(b);
        Ok(self.push(Op::AddScaled(a, b, c), value, rg))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a].value.mapv(|x| x.max(0.0));
        let rg = self.needs_grad(a);
        self.push(Op::Relu(a), value, rg)
    }

    /// Inverted dropout: keeps entries with probability `1-p` and scales
    /// them by `1/(1-p)`. `p == 0` is the identity and records nothing.
    pub fn dropout<R: Rng>(&mut self, a: NodeId, p: f64, rng: &mut R) -> NodeId {
        if p == 0.0 {
            return a;
        }
        let keep = 1.0 - p;
        let scale = 1.0 / keep;
        let mask = Array2::from_shape_fn(self.nodes[a].value.dim(), |_| {
            if rng.random::<f64>() < keep {
                scale
            } else {
                0.0
            }
        });
        let value = &self.nodes[a].value * &mask;
        let rg = self.needs_grad(a);
        self.push(Op::Dropout(a, mask), value, rg)
    }

    /// `diag(scale) · data`: row i of `data` times `scale[i]`.
    pub fn row_scale(&mut self, data: NodeId, scale: NodeId) -> Result<NodeId> {
        let (n, _) = self.nodes[data].value.dim();
        let sdim = self.nodes[scale].value.dim();
        if sdim != (n, 1) {
            return Err(CoreError::ShapeMismatch {
                context: "row_scale",
                lhs: (n, 1),
                rhs: sdim,
            });
        }
        let mut value = self.nodes[data].value.clone();
        for (i, mut row) in value.rows_mut().into_iter().enumerate() {
            let s = self.nodes[scale].value[(i, 0)];
            row.mapv_inplace(|x| x * s);
        }
        let rg = self.needs_grad(data) || self.needs_grad(scale);
        Ok(self.push(Op::RowScale { data, scale }, value, rg))
    }

    /// Mean softmax cross-entropy over the given rows. Logits may first be
    /// clipped to `[-b, b]`; gradients are zero where the clip is active.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: NodeId,
        labels: &[usize],
        rows: &[usize],
        clip: Option<f64>,
    ) -> Result<NodeId> {
        if rows.is_empty() {
            return Err(CoreError::EmptyMask);
        }
        let (n, classes) = self.nodes[logits].value.dim();
        if labels.len() != n {
            return Err(CoreError::LabelLenMismatch {
                len: labels.len(),
                n,
            });
        }
        for &r in rows {
            if r >= n {
                return Err(CoreError::EdgeOutOfRange(r, r, n));
            }
            if labels[r] >= classes {
                return Err(CoreError::LabelOutOfRange {
                    node: r,
                    label: labels[r],
                    classes,
                });
            }
        }
        let mut total = 0.0f64;
        for &r in rows {
            let z = clipped_row(&self.nodes[logits].value, r, clip);
            let (lse, _) = log_sum_exp(&z);
            total += lse - z[labels[r]];
        }
        let value = Array2::from_elem((1, 1), total / rows.len() as f64);
        let rg = self.needs_grad(logits);
        Ok(self.push(
            Op::SoftmaxCrossEntropy {
                logits,
                labels: labels.to_vec(),
                rows: rows.to_vec(),
                clip,
            },
            value,
            rg,
        ))
    }

    /// `‖num‖_F² / denom`. The caller guarantees `denom > 0`.
    pub fn squared_frobenius_ratio(&mut self, num: NodeId, denom: f64) -> NodeId {
        let sq: f64 = self.nodes[num].value.iter().map(|v| v * v).sum();
        let value = Array2::from_elem((1, 1), sq / denom);
        let rg = self.needs_grad(num);
        self.push(Op::SquaredFrobeniusRatio { num, denom }, value, rg)
    }

    /// Reverse sweep from `output`, seeded with `∂L/∂output`.
    ///
    /// Returns one gradient slot per node; slots for nodes that do not
    /// require gradients (or are not on a path to `output`) stay `None`.
    pub fn backward(&self, output: NodeId, seed: Array2<f64>) -> Vec<Option<Array2<f64>>> {
        assert_eq!(
            seed.dim(),
            self.nodes[output].value.dim(),
            "seed shape must match the output shape"
        );
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[output] = Some(seed);

        for id in (0..=output).rev() {
            let Some(grad) = grads[id].take() else {
                continue;
            };
            // Re-store for callers; taking above avoids aliasing while we
            // push into parents.
            match &self.nodes[id].op {
                Op::Constant | Op::Param => {
                    grads[id] = Some(grad);
                    continue;
                }
                Op::MatMul(a, b) => {
                    if self.needs_grad(*a) {
                        let da = grad.dot(&self.nodes[*b].value.t());
                        accumulate(&mut grads[*a], da);
                    }
                    if self.needs_grad(*b) {
                        let db = self.nodes[*a].value.t().dot(&grad);
                        accumulate(&mut grads[*b], db);
                    }
                }
                Op::AddScaled(a, b, c) => {
                    if self.needs_grad(*a) {
                        accumulate(&mut grads[*a], grad.clone());
                    }
                    if self.needs_grad(*b) {
                        accumulate(&mut grads[*b], *c * &grad);
                    }
                }
                Op::Relu(a) => {
                    if self.needs_grad(*a) {
                        let mut da = grad.clone();
                        da.zip_mut_with(&self.nodes[*a].value, |g, &x| {
                            if x <= 0.0 {
                                *g = 0.0;
                            }
                        });
                        accumulate(&mut grads[*a], da);
                    }
                }
                Op::Dropout(a, mask) => {
                    if self.needs_grad(*a) {
                        accumulate(&mut grads[*a], &grad * mask);
                    }
                }
                Op::RowScale { data, scale } => {
                    if self.needs_grad(*data) {
                        let mut dd = grad.clone();
                        for (i, mut row) in dd.rows_mut().into_iter().enumerate() {
                            let s = self.nodes[*scale].value[(i, 0)];
                            row.mapv_inplace(|x| x * s);
                        }
                        accumulate(&mut grads[*data], dd);
                    }
                    if self.needs_grad(*scale) {
                        let d = &self.nodes[*data].value;
                        let n = d.nrows();
                        let mut ds = Array2::<f64>::zeros((n, 1));
                        for i in 0..n {
                            let mut acc = 0.0;
                            for j in 0..d.ncols() {
                                acc += grad[(i, j)] * d[(i, j)];
                            }
                            ds[(i, 0)] = acc;
                        }
                        accumulate(&mut grads[*scale], ds);
                    }
                }
                Op::SoftmaxCrossEntropy {
                    logits,
                    labels,
                    rows,
                    clip,
                } => {
                    if self.needs_grad(*logits) {
                        let g = grad[(0, 0)] / rows.len() as f64;
                        let lvals = &self.nodes[*logits].value;
                        let mut dl = Array2::<f64>::zeros(lvals.dim());
                        for &r in rows {
                            let z = clipped_row(lvals, r, *clip);
                            let (lse, _) = log_sum_exp(&z);
                            for (k, &zk) in z.iter().enumerate() {
                                if clip_active(lvals[(r, k)], *clip) {
                                    continue;
                                }
                                let p = (zk - lse).exp();
                                let y = if k == labels[r] { 1.0 } else { 0.0 };
                                dl[(r, k)] += g * (p - y);
                            }
                        }
                        accumulate(&mut grads[*logits], dl);
                    }
                }
                Op::SquaredFrobeniusRatio { num, denom } => {
                    if self.needs_grad(*num) {
                        let g = grad[(0, 0)] * 2.0 / denom;
                        accumulate(&mut grads[*num], g * &self.nodes[*num].value);
                    }
                }
            }
        }
        grads
    }

    /// Forward tangent sweep: propagate the seeded directional derivatives
    /// through the recorded operations. Unseeded leaves carry a zero
    /// tangent (represented as `None`).
    pub fn tangents(&self, seeds: &[(NodeId, Array2<f64>)]) -> Vec<Option<Array2<f64>>> {
        let mut t: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        for (id, seed) in seeds {
            assert_eq!(seed.dim(), self.nodes[*id].value.dim());
            t[*id] = Some(seed.clone());
        }
        for id in 0..self.nodes.len() {
            let tangent = match &self.nodes[id].op {
                Op::Constant | Op::Param => continue,
                Op::MatMul(a, b) => {
                    let mut acc: Option<Array2<f64>> = None;
                    if let Some(ta) = &t[*a] {
                        acc = Some(ta.dot(&self.nodes[*b].value));
                    }
                    if let Some(tb) = &t[*b] {
                        let term = self.nodes[*a].value.dot(tb);
                        acc = Some(match acc {
                            Some(v) => v + term,
                            None => term,
                        });
                    }
                    acc
                }
                Op::AddScaled(a, b, c) => {
                    let mut acc = t[*a].clone();
                    if let Some(tb) = &t[*b] {
                        let term = *c * tb;
                        acc = Some(match acc {
                            Some(v) => v + term,
                            None => term,
                        });
                    }
                    acc
                }
                Op::Relu(a) => t[*a].as_ref().map(|ta| {
                    let mut out = ta.clone();
                    out.zip_mut_with(&self.nodes[*a].value, |g, &x| {
                        if x <= 0.0 {
                            *g = 0.0;
                        }
                    });
                    out
                }),
                Op::Dropout(a, mask) => t[*a].as_ref().map(|ta| ta * mask),
                Op::RowScale { data, scale } => {
                    let mut acc: Option<Array2<f64>> = None;
                    if let Some(td) = &t[*data] {
                        let mut out = td.clone();
                        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
                            let s = self.nodes[*scale].value[(i, 0)];
                            row.mapv_inplace(|x| x * s);
                        }
                        acc = Some(out);
                    }
                    if let Some(ts) = &t[*scale] {
                        let d = &self.nodes[*data].value;
                        let mut term = d.clone();
                        for (i, mut row) in term.rows_mut().into_iter().enumerate() {
                            let s = ts[(i, 0)];
                            row.mapv_inplace(|x| x * s);
                        }
                        acc = Some(match acc {
                            Some(v) => v + term,
                            None => term,
                        });
                    }
                    acc
                }
                Op::SoftmaxCrossEntropy {
                    logits,
                    labels,
                    rows,
                    clip,
                } => t[*logits].as_ref().map(|tl| {
                    let lvals = &self.nodes[*logits].value;
                    let mut acc = 0.0;
                    for &r in rows {
                        let z = clipped_row(lvals, r, *clip);
                        let (lse, _) = log_sum_exp(&z);
                        for (k, &zk) in z.iter().enumerate() {
                            if clip_active(lvals[(r, k)], *clip) {
                                continue;
                            }
                            let p = (zk - lse).exp();
                            let y = if k == labels[r] { 1.0 } else { 0.0 };
                            acc += (p - y) * tl[(r, k)];
                        }
                    }
                    Array2::from_elem((1, 1), acc / rows.len() as f64)
                }),
                Op::SquaredFrobeniusRatio { num, denom } => t[*num].as_ref().map(|tn| {
                    let dot: f64 = self.nodes[*num]
                        .value
                        .iter()
                        .zip(tn.iter())
                        .map(|(a, b)| a * b)
                        .sum();
                    Array2::from_elem((1, 1), 2.0 * dot / denom)
                }),
            };
            if let Some(v) = tangent {
                t[id] = Some(v);
            }
        }
        t
    }
}

fn accumulate(slot: &mut Option<Array2<f64>>, add: Array2<f64>) {
    match slot {
        Some(existing) => *existing += &add,
        None => *slot = Some(add),
    }
}

fn clip_active(x: f64, clip: Option<f64>) -> bool {
    match clip {
        Some(b) => x.abs() >= b,
        None => false,
    }
}

fn clipped_row(m: &Array2<f64>, row: usize, clip: Option<f64>) -> Vec<f64> {
    let r = m.row(row);
    match clip {
        Some(b) => r.iter().map(|&x| x.clamp(-b, b)).collect(),
        None => r.to_vec(),
    }
}

fn log_sum_exp(z: &[f64]) -> (f64, f64) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|&x| (x - max).exp()).sum();
    (max + sum.ln(), max)
}
