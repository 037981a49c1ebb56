//! Named parameter store shared by a network across episode graphs.
//!
//! A [`ParamSet`] owns the authoritative tensor per parameter plus an
//! accumulated gradient buffer. Graphs work on value snapshots: binding a
//! set to a graph creates one leaf per parameter, and after `backward`
//! the leaf gradients are folded back into the store. Iteration order is
//! insertion order everywhere, which keeps training bit-reproducible.

use std::collections::HashMap;

use super::graph::{Graph, NodeId};
use super::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Param {
    name: String,
    value: Tensor,
    grad: Tensor,
    trainable: bool,
}

impl Param {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> &Tensor {
        &self.value
    }

    pub fn grad(&self) -> &Tensor {
        &self.grad
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }
}

#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    entries: Vec<Param>,
    by_name: HashMap<String, ParamId>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a trainable parameter. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.add_with(name, value, true)
    }

    /// Register a parameter excluded from optimizer updates.
    pub fn add_frozen(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.add_with(name, value, false)
    }

    fn add_with(&mut self, name: impl Into<String>, value: Tensor, trainable: bool) -> ParamId {
        let name = name.into();
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate parameter name {name:?}"
        );
        let id = ParamId(self.entries.len());
        self.by_name.insert(name.clone(), id);
        let grad = Tensor::zeros(value.shape());
        self.entries.push(Param {
            name,
            value,
            grad,
            trainable,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar entries across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|p| p.value.len()).sum()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.entries[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].grad
    }

    /// Insertion-ordered iteration; the order is part of the crate's
    /// determinism contract.
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.entries.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.entries {
            p.grad.data_mut().fill(0.0);
        }
    }

    /// Snapshot every parameter into `graph` as a leaf.
    pub fn bind(&self, graph: &mut Graph) -> Binding {
        let nodes = self
            .entries
            .iter()
            .map(|p| graph.leaf(p.value.clone()))
            .collect();
        Binding { nodes }
    }

    /// Fold leaf gradients from a backward pass into the accumulated
    /// per-parameter gradients. Leaves the values untouched.
    pub fn accumulate_grads(&mut self, graph: &Graph, binding: &Binding) {
        assert_eq!(
            binding.nodes.len(),
            self.entries.len(),
            "binding does not match this parameter set"
        );
        for (p, &node) in self.entries.iter_mut().zip(&binding.nodes) {
            if let Some(g) = graph.grad(node) {
                for (acc, gi) in p.grad.data_mut().iter_mut().zip(g.data()) {
                    *acc += gi;
                }
            }
        }
    }

    /// Flat copy of all values, insertion order. Used by checkpoint
    /// hashing and gradient checks.
    pub fn flatten_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.scalar_count());
        for p in &self.entries {
            out.extend_from_slice(p.value.data());
        }
        out
    }

    /// Overwrite all values from a flat slice, insertion order.
    pub fn load_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.scalar_count(), "flat size mismatch");
        let mut off = 0;
        for p in &mut self.entries {
            let n = p.value.len();
            p.value.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
    }

    /// Flat copy of accumulated gradients, insertion order.
    pub fn flatten_grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.scalar_count());
        for p in &self.entries {
            out.extend_from_slice(p.grad.data());
        }
        out
    }
}

/// Leaf node per parameter of one `ParamSet` inside one graph, aligned by
/// `ParamId` index.
#[derive(Clone, Debug)]
pub struct Binding {
    nodes: Vec<NodeId>,
}

impl Binding {
    pub fn node(&self, id: ParamId) -> NodeId {
        self.nodes[id.index()]
    }
}
