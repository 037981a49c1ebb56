//! Recurrent policy/value networks.
//!
//! One architecture serves every agent variant: two ELU-activated linear
//! layers feed a single LSTM cell, whose hidden state drives a softmax
//! policy head and a scalar value head (plus an optional extra action-
//! prediction head). What varies between variants is only the input
//! assembly in front of the trunk, so the same parameters can be run
//! "as self" or "as other" by exchanging the goal slots.

mod checkpoint;
mod init;

pub use checkpoint::{Checkpoint, CheckpointError, FORMAT_MAGIC, FORMAT_VERSION};
pub use init::orthogonal_init;

use thiserror::Error;

use crate::autodiff::{Binding, Graph, NodeId, ParamId, ParamSet, Tensor};
use crate::rng::Stream;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Sizes of one recurrent core.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetDims {
    pub input: usize,
    pub hidden: usize,
    pub nactions: usize,
}

/// LSTM hidden and cell state between steps. Plain values: cloning is a
/// snapshot, assignment is a restore.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState {
    pub h: Tensor,
    pub c: Tensor,
}

impl RecurrentState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: Tensor::zeros(&[hidden]),
            c: Tensor::zeros(&[hidden]),
        }
    }

    pub fn snapshot(&self) -> Self {
        self.clone()
    }

    pub fn restore(&mut self, saved: &Self) {
        *self = saved.clone();
    }

    /// Enter the state into a graph as constant leaves.
    pub fn enter(&self, g: &mut Graph) -> (NodeId, NodeId) {
        (g.input(self.h.clone()), g.input(self.c.clone()))
    }

    /// Read a state back out of graph nodes.
    pub fn read(g: &Graph, h: NodeId, c: NodeId) -> Self {
        Self {
            h: g.value(h).clone(),
            c: g.value(c).clone(),
        }
    }
}

/// Goal input: one-hot for known or committed goals, simplex for beliefs.
#[derive(Clone, Debug, PartialEq)]
pub struct GoalVector(Tensor);

impl GoalVector {
    pub fn one_hot(ngoals: usize, goal: usize) -> Self {
        Self(Tensor::one_hot(ngoals, goal))
    }

    /// Uniform belief over `ngoals` goals.
    pub fn uniform(ngoals: usize) -> Self {
        assert!(ngoals > 0);
        Self(Tensor::vector(vec![1.0 / ngoals as f64; ngoals]))
    }

    pub fn from_simplex(t: Tensor) -> Self {
        let sum: f64 = t.data().iter().sum();
        assert!(
            (sum - 1.0).abs() < 1e-9 && t.data().iter().all(|&v| v >= 0.0),
            "goal vector must lie on the simplex"
        );
        Self(t)
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Parameter handles for one trunk + heads. The tensors themselves live
/// in the owning [`ParamSet`].
#[derive(Clone, Debug)]
pub struct RecurrentCore {
    pub dims: NetDims,
    fc1_w: ParamId,
    fc1_b: ParamId,
    fc2_w: ParamId,
    fc2_b: ParamId,
    lstm_wx: ParamId,
    lstm_wh: ParamId,
    lstm_b: ParamId,
    policy_w: ParamId,
    policy_b: ParamId,
    value_w: ParamId,
    value_b: ParamId,
    predict: Option<(ParamId, ParamId)>,
}

/// One unrolled step: policy distribution, state value, optional
/// other-action prediction, and the next recurrent state, all as graph
/// nodes.
#[derive(Clone, Copy, Debug)]
pub struct CoreStep {
    pub policy: NodeId,
    pub value: NodeId,
    pub predict: Option<NodeId>,
    pub h: NodeId,
    pub c: NodeId,
}

impl RecurrentCore {
    /// Create parameters under `prefix` in `params`: weights
    /// semi-orthogonal, biases zero. `with_predict` adds the extra
    /// action-prediction head.
    pub fn new(
        params: &mut ParamSet,
        prefix: &str,
        dims: NetDims,
        with_predict: bool,
        rng: &mut Stream,
    ) -> Self {
        let NetDims {
            input,
            hidden,
            nactions,
        } = dims;
        assert!(input > 0 && hidden > 0 && nactions > 0, "bad dims {dims:?}");
        let n = |s: &str| format!("{prefix}{s}");
        let fc1_w = params.add(n("fc1.w"), orthogonal_init(hidden, input, rng));
        let fc1_b = params.add(n("fc1.b"), Tensor::zeros(&[hidden]));
        let fc2_w = params.add(n("fc2.w"), orthogonal_init(hidden, hidden, rng));
        let fc2_b = params.add(n("fc2.b"), Tensor::zeros(&[hidden]));
        let lstm_wx = params.add(n("lstm.wx"), orthogonal_init(4 * hidden, hidden, rng));
        let lstm_wh = params.add(n("lstm.wh"), orthogonal_init(4 * hidden, hidden, rng));
        let lstm_b = params.add(n("lstm.b"), Tensor::zeros(&[4 * hidden]));
        let policy_w = params.add(n("policy.w"), orthogonal_init(nactions, hidden, rng));
        let policy_b = params.add(n("policy.b"), Tensor::zeros(&[nactions]));
        let value_w = params.add(n("value.w"), orthogonal_init(1, hidden, rng));
        let value_b = params.add(n("value.b"), Tensor::zeros(&[1]));
        let predict = with_predict.then(|| {
            (
                params.add(n("predict.w"), orthogonal_init(nactions, hidden, rng)),
                params.add(n("predict.b"), Tensor::zeros(&[nactions])),
            )
        });
        Self {
            dims,
            fc1_w,
            fc1_b,
            fc2_w,
            fc2_b,
            lstm_wx,
            lstm_wh,
            lstm_b,
            policy_w,
            policy_b,
            value_w,
            value_b,
            predict,
        }
    }

    /// Closed-form scalar parameter count for these dims.
    pub fn param_count(dims: NetDims, with_predict: bool) -> usize {
        let NetDims {
            input,
            hidden,
            nactions,
        } = dims;
        let trunk = hidden * (input + 1) + hidden * (hidden + 1);
        let lstm = 8 * hidden * hidden + 4 * hidden;
        let heads = nactions * (hidden + 1) + (hidden + 1);
        let predict = if with_predict {
            nactions * (hidden + 1)
        } else {
            0
        };
        trunk + lstm + heads + predict
    }

    /// Unroll one step on `graph`. `input` must have length
    /// `dims.input`; `rec` are the previous hidden/cell nodes.
    pub fn step(
        &self,
        graph: &mut Graph,
        binding: &Binding,
        input: NodeId,
        rec: (NodeId, NodeId),
    ) -> Result<CoreStep, NeuralError> {
        let got = graph.value(input).len();
        if got != self.dims.input {
            return Err(NeuralError::DimensionMismatch {
                what: "network input",
                expected: self.dims.input,
                got,
            });
        }
        let h = self.dims.hidden;
        let p = |id: ParamId| binding.node(id);

        let a1 = graph.matvec(p(self.fc1_w), input);
        let a1 = graph.add(a1, p(self.fc1_b));
        let x1 = graph.elu(a1);
        let a2 = graph.matvec(p(self.fc2_w), x1);
        let a2 = graph.add(a2, p(self.fc2_b));
        let x2 = graph.elu(a2);

        // Standard 4-gate cell, gate order [input, forget, cell, output].
        let zx = graph.matvec(p(self.lstm_wx), x2);
        let zh = graph.matvec(p(self.lstm_wh), rec.0);
        let z = graph.add(zx, zh);
        let z = graph.add(z, p(self.lstm_b));
        let zi = graph.slice(z, 0, h);
        let zf = graph.slice(z, h, h);
        let zg = graph.slice(z, 2 * h, h);
        let zo = graph.slice(z, 3 * h, h);
        let gi = graph.sigmoid(zi);
        let gf = graph.sigmoid(zf);
        let gg = graph.tanh(zg);
        let go = graph.sigmoid(zo);
        let fc = graph.mul(gf, rec.1);
        let ig = graph.mul(gi, gg);
        let c2 = graph.add(fc, ig);
        let tc = graph.tanh(c2);
        let h2 = graph.mul(go, tc);

        let pl = graph.matvec(p(self.policy_w), h2);
        let pl = graph.add(pl, p(self.policy_b));
        let policy = graph.softmax(pl);
        let v = graph.matvec(p(self.value_w), h2);
        let value = graph.add(v, p(self.value_b));
        let predict = self.predict.map(|(w, b)| {
            let q = graph.matvec(p(w), h2);
            let q = graph.add(q, p(b));
            graph.softmax(q)
        });

        Ok(CoreStep {
            policy,
            value,
            predict,
            h: h2,
            c: c2,
        })
    }
}

/// The goal-slotted network: input is `[observation, goal in own slot,
/// goal in other slot]`. Running it "as self" puts the agent's own goal
/// in the first slot; running it "as other" swaps the slots (and feeds
/// the opponent-perspective observation).
#[derive(Clone, Debug)]
pub struct PolicyValueNet {
    pub core: RecurrentCore,
    pub nfeatures: usize,
    pub ngoals: usize,
}

impl PolicyValueNet {
    pub fn new(
        params: &mut ParamSet,
        prefix: &str,
        nfeatures: usize,
        ngoals: usize,
        hidden: usize,
        nactions: usize,
        rng: &mut Stream,
    ) -> Self {
        let dims = NetDims {
            input: nfeatures + 2 * ngoals,
            hidden,
            nactions,
        };
        Self {
            core: RecurrentCore::new(params, prefix, dims, false, rng),
            nfeatures,
            ngoals,
        }
    }

    /// One step with explicit goal slots. `s`, `z_own_slot` and
    /// `z_other_slot` are nodes already in `graph`.
    pub fn forward(
        &self,
        graph: &mut Graph,
        binding: &Binding,
        s: NodeId,
        z_own_slot: NodeId,
        z_other_slot: NodeId,
        rec: (NodeId, NodeId),
    ) -> Result<CoreStep, NeuralError> {
        for (what, node, expected) in [
            ("observation", s, self.nfeatures),
            ("own-slot goal", z_own_slot, self.ngoals),
            ("other-slot goal", z_other_slot, self.ngoals),
        ] {
            let got = graph.value(node).len();
            if got != expected {
                return Err(NeuralError::DimensionMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        let input = graph.concat(&[s, z_own_slot, z_other_slot]);
        self.core.step(graph, binding, input, rec)
    }

    /// Convenience forward on a throwaway graph, for evaluation paths
    /// that do not need gradients.
    pub fn forward_values(
        &self,
        params: &ParamSet,
        s: &Tensor,
        z_own_slot: &GoalVector,
        z_other_slot: &GoalVector,
        rec: &RecurrentState,
    ) -> Result<(Tensor, f64, RecurrentState), NeuralError> {
        let mut graph = Graph::new();
        let binding = params.bind(&mut graph);
        let sn = graph.input(s.clone());
        let za = graph.input(z_own_slot.tensor().clone());
        let zb = graph.input(z_other_slot.tensor().clone());
        let rn = rec.enter(&mut graph);
        let step = self.forward(&mut graph, &binding, sn, za, zb, rn)?;
        Ok((
            graph.value(step.policy).clone(),
            graph.value(step.value).item(),
            RecurrentState::read(&graph, step.h, step.c),
        ))
    }
}
