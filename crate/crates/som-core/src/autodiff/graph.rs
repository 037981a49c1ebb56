//! Define-by-run reverse-mode tape over [`Tensor`] values.
//!
//! Each op builder computes its forward value immediately and appends a
//! node; `backward` replays the tape in reverse, accumulating gradients
//! for every node it reaches. Gradients of leaves are read back through
//! [`Graph::grad`]. The tape is append-only, so node ids are already a
//! topological order.

use thiserror::Error;

use super::tensor::Tensor;

/// Logs and probability denominators are floored here so losses stay
/// finite; below the floor the clamped function is constant, so its
/// gradient is zero.
pub const LOG_CLAMP: f64 = 1e-20;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
}

/// Handle to a node in one specific [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug)]
enum Op {
    /// Leaf holding a value snapshot. Gradients accumulate here like
    /// anywhere else; whether anyone reads them is the caller's business.
    Leaf,
    /// `W x` with `W: [r, c]`, `x: [c]`.
    MatVec(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product.
    Mul(NodeId, NodeId),
    /// Constant scale.
    Scale(NodeId, f64),
    Concat(Vec<NodeId>),
    /// Contiguous window `offset..offset + len` of a vector.
    Slice(NodeId, usize, usize),
    Sigmoid(NodeId),
    Tanh(NodeId),
    /// `x` for `x > 0`, `exp(x) - 1` otherwise; slope at 0 defined as 1.
    Elu(NodeId),
    /// Stable softmax over a whole rank-1 tensor.
    Softmax(NodeId),
    /// `ln(max(x, LOG_CLAMP))` elementwise.
    Log(NodeId),
    /// Sum of all entries, scalar result.
    Sum(NodeId),
    /// `-ln(max(p[class], LOG_CLAMP))` for a probability vector `p`.
    CrossEntropy(NodeId, usize),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Wengert tape. Values are stored on the nodes; gradients live in a
/// parallel buffer that `backward` rebuilds from scratch on every call,
/// so repeated backward passes from the same loss are identical.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
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

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.index()].value
    }

    /// Gradient of the last `backward` loss w.r.t. this node. `None` if
    /// no gradient flowed here (or backward has not run).
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.index()).and_then(|g| g.as_ref())
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { op, value });
        id
    }

    /// Constant leaf: inputs, observations, detached values.
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    /// Leaf whose gradient the caller intends to read. Mechanically
    /// identical to `input`; the distinction documents intent at call
    /// sites.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    /// Re-enter a node's current value as a fresh constant, cutting the
    /// gradient path (advantage terms in the actor loss).
    pub fn detach(&mut self, id: NodeId) -> NodeId {
        let v = self.value(id).clone();
        self.input(v)
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> NodeId {
        let (wt, xt) = (self.value(w), self.value(x));
        assert_eq!(wt.shape().len(), 2, "matvec weight must be rank 2");
        let (r, c) = (wt.rows(), wt.cols());
        assert_eq!(c, xt.len(), "matvec {r}x{c} against vector of {}", xt.len());
        let mut out = vec![0.0; r];
        let wd = wt.data();
        let xd = xt.data();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &wd[i * c..(i + 1) * c];
            *o = row.iter().zip(xd).map(|(a, b)| a * b).sum();
        }
        self.push(Op::MatVec(w, x), Tensor::vector(out))
    }

    fn zip_shapes(&self, a: NodeId, b: NodeId, what: &str) {
        assert_eq!(
            self.value(a).shape(),
            self.value(b).shape(),
            "{what} wants matching shapes"
        );
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip_shapes(a, b, "add");
        let v: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        self.push(Op::Add(a, b), Tensor::from_shape(shape, v))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip_shapes(a, b, "sub");
        let v: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x - y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        self.push(Op::Sub(a, b), Tensor::from_shape(shape, v))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.zip_shapes(a, b, "mul");
        let v: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        self.push(Op::Mul(a, b), Tensor::from_shape(shape, v))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let v: Vec<f64> = self.value(x).data().iter().map(|&a| a * c).collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Op::Scale(x, c), Tensor::from_shape(shape, v))
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat of nothing");
        let mut v = Vec::new();
        for &p in parts {
            v.extend_from_slice(self.value(p).data());
        }
        self.push(Op::Concat(parts.to_vec()), Tensor::vector(v))
    }

    pub fn slice(&mut self, x: NodeId, offset: usize, len: usize) -> NodeId {
        let xt = self.value(x);
        assert!(
            offset + len <= xt.len(),
            "slice {offset}..{} of length {}",
            offset + len,
            xt.len()
        );
        let v = xt.data()[offset..offset + len].to_vec();
        self.push(Op::Slice(x, offset, len), Tensor::vector(v))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v: Vec<f64> = self
            .value(x)
            .data()
            .iter()
            .map(|&a| 1.0 / (1.0 + (-a).exp()))
            .collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Op::Sigmoid(x), Tensor::from_shape(shape, v))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v: Vec<f64> = self.value(x).data().iter().map(|&a| a.tanh()).collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Op::Tanh(x), Tensor::from_shape(shape, v))
    }

    pub fn elu(&mut self, x: NodeId) -> NodeId {
        let v: Vec<f64> = self
            .value(x)
            .data()
            .iter()
            .map(|&a| if a > 0.0 { a } else { a.exp() - 1.0 })
            .collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Op::Elu(x), Tensor::from_shape(shape, v))
    }

    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let v = super::tensor::softmax_slice(self.value(x).data());
        self.push(Op::Softmax(x), Tensor::vector(v))
    }

    pub fn log(&mut self, x: NodeId) -> NodeId {
        let v: Vec<f64> = self
            .value(x)
            .data()
            .iter()
            .map(|&a| a.max(LOG_CLAMP).ln())
            .collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Op::Log(x), Tensor::from_shape(shape, v))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let s: f64 = self.value(x).data().iter().sum();
        self.push(Op::Sum(x), Tensor::scalar(s))
    }

    /// Negative log likelihood of `class` under probability vector `p`.
    pub fn cross_entropy(&mut self, p: NodeId, class: usize) -> NodeId {
        let pt = self.value(p);
        assert!(
            class < pt.len(),
            "cross_entropy class {class} out of range {}",
            pt.len()
        );
        let v = -pt.data()[class].max(LOG_CLAMP).ln();
        self.push(Op::CrossEntropy(p, class), Tensor::scalar(v))
    }

    /// Sum a list of scalar nodes; empty input yields a constant zero.
    pub fn sum_scalars(&mut self, terms: &[NodeId]) -> NodeId {
        match terms.split_first() {
            None => self.input(Tensor::scalar(0.0)),
            Some((&first, rest)) => {
                let mut acc = first;
                for &t in rest {
                    acc = self.add(acc, t);
                }
                acc
            }
        }
    }

    fn add_grad(grads: &mut [Option<Tensor>], id: NodeId, shape: &[usize], f: impl FnOnce(&mut [f64])) {
        let slot = &mut grads[id.index()];
        if slot.is_none() {
            *slot = Some(Tensor::zeros(shape));
        }
        f(slot.as_mut().expect("just filled").data_mut());
    }

    /// Reverse accumulation from a scalar `loss`. Rebuilds the gradient
    /// buffer, so calling twice gives bitwise identical results.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), AutodiffError> {
        let lt = self.value(loss);
        if !lt.is_scalar() {
            return Err(AutodiffError::NonScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.index()] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.index()).rev() {
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            let dyd = dy.data();
            // `grads` is a local buffer, so node values stay borrowable
            // while gradients are written.
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatVec(w, x) => {
                    let wt = &self.nodes[w.index()].value;
                    let (r, c) = (wt.rows(), wt.cols());
                    let wd = wt.data();
                    let xd = self.nodes[x.index()].value.data();
                    Self::add_grad(&mut grads, *w, &[r, c], |gw| {
                        for i in 0..r {
                            let d = dyd[i];
                            let row = &mut gw[i * c..(i + 1) * c];
                            for (gj, xj) in row.iter_mut().zip(xd) {
                                *gj += d * xj;
                            }
                        }
                    });
                    Self::add_grad(&mut grads, *x, &[c], |gx| {
                        for i in 0..r {
                            let d = dyd[i];
                            let row = &wd[i * c..(i + 1) * c];
                            for (gj, wj) in gx.iter_mut().zip(row) {
                                *gj += wj * d;
                            }
                        }
                    });
                }
                Op::Add(a, b) => {
                    let shape = dy.shape();
                    for id in [*a, *b] {
                        Self::add_grad(&mut grads, id, shape, |g| {
                            for (gi, di) in g.iter_mut().zip(dyd) {
                                *gi += di;
                            }
                        });
                    }
                }
                Op::Sub(a, b) => {
                    let shape = dy.shape();
                    Self::add_grad(&mut grads, *a, shape, |g| {
                        for (gi, di) in g.iter_mut().zip(dyd) {
                            *gi += di;
                        }
                    });
                    Self::add_grad(&mut grads, *b, shape, |g| {
                        for (gi, di) in g.iter_mut().zip(dyd) {
                            *gi -= di;
                        }
                    });
                }
                Op::Mul(a, b) => {
                    let shape = dy.shape();
                    let ad = self.nodes[a.index()].value.data();
                    let bd = self.nodes[b.index()].value.data();
                    Self::add_grad(&mut grads, *a, shape, |g| {
                        for i in 0..g.len() {
                            g[i] += bd[i] * dyd[i];
                        }
                    });
                    Self::add_grad(&mut grads, *b, shape, |g| {
                        for i in 0..g.len() {
                            g[i] += ad[i] * dyd[i];
                        }
                    });
                }
                Op::Scale(x, c) => {
                    Self::add_grad(&mut grads, *x, dy.shape(), |g| {
                        for (gi, di) in g.iter_mut().zip(dyd) {
                            *gi += c * di;
                        }
                    });
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let part = &self.nodes[p.index()].value;
                        let len = part.len();
                        let seg = &dyd[off..off + len];
                        Self::add_grad(&mut grads, p, part.shape(), |g| {
                            for (gi, di) in g.iter_mut().zip(seg) {
                                *gi += di;
                            }
                        });
                        off += len;
                    }
                }
                Op::Slice(x, offset, len) => {
                    let shape = self.nodes[x.index()].value.shape();
                    Self::add_grad(&mut grads, *x, shape, |g| {
                        for i in 0..*len {
                            g[offset + i] += dyd[i];
                        }
                    });
                }
                Op::Sigmoid(x) => {
                    let out = self.nodes[idx].value.data();
                    Self::add_grad(&mut grads, *x, dy.shape(), |g| {
                        for i in 0..g.len() {
                            g[i] += out[i] * (1.0 - out[i]) * dyd[i];
                        }
                    });
                }
                Op::Tanh(x) => {
                    let out = self.nodes[idx].value.data();
                    Self::add_grad(&mut grads, *x, dy.shape(), |g| {
                        for i in 0..g.len() {
                            g[i] += (1.0 - out[i] * out[i]) * dyd[i];
                        }
                    });
                }
                Op::Elu(x) => {
                    let inp = self.nodes[x.index()].value.data();
                    let out = self.nodes[idx].value.data();
                    Self::add_grad(&mut grads, *x, dy.shape(), |g| {
                        for i in 0..g.len() {
                            // Slope at exactly 0 is taken as 1.
                            let d = if inp[i] >= 0.0 { 1.0 } else { out[i] + 1.0 };
                            g[i] += d * dyd[i];
                        }
                    });
                }
                Op::Softmax(x) => {
                    let p = self.nodes[idx].value.data();
                    let dot: f64 = p.iter().zip(dyd).map(|(pi, di)| pi * di).sum();
                    Self::add_grad(&mut grads, *x, dy.shape(), |g| {
                        for i in 0..g.len() {
                            g[i] += p[i] * (dyd[i] - dot);
                        }
                    });
                }
                Op::Log(x) => {
                    let inp = self.nodes[x.index()].value.data();
                    Self::add_grad(&mut grads, *x, dy.shape(), |g| {
                        for i in 0..g.len() {
                            // Zero slope inside the clamped region.
                            if inp[i] > LOG_CLAMP {
                                g[i] += dyd[i] / inp[i];
                            }
                        }
                    });
                }
                Op::Sum(x) => {
                    let shape = self.nodes[x.index()].value.shape();
                    let d = dyd[0];
                    Self::add_grad(&mut grads, *x, shape, |g| {
                        for gi in g.iter_mut() {
                            *gi += d;
                        }
                    });
                }
                Op::CrossEntropy(p, class) => {
                    let pt = &self.nodes[p.index()].value;
                    let pk = pt.data()[*class];
                    let d = dyd[0];
                    let class = *class;
                    Self::add_grad(&mut grads, *p, pt.shape(), |g| {
                        if pk > LOG_CLAMP {
                            g[class] += -d / pk;
                        }
                    });
                }
            }
            grads[idx] = Some(dy);
        }
        self.grads = grads;
        Ok(())
    }
}
