//! Players: the self-modeling agent, the baselines it is compared
//! against, and deterministic scripted opponents for harnesses.
//!
//! The self-modeling agent owns a single recurrent policy network with
//! two goal input slots: its own goal and its current belief about the
//! other player's goal. To read the other player's mind it runs the
//! same network "as" the other player: slots swapped, observation
//! re-encoded from the other's perspective, and the belief optimized
//! online by gradient descent so the network would have produced the
//! actions actually observed. The network parameters are never touched
//! by that inner optimization; only the belief logits move.
//!
//! Acting and inference happen on different recurrent states. Acting
//! steps extend the episode tape (a growing autodiff graph used for the
//! end-of-episode policy update). Inference keeps a separate persistent
//! hidden state that tracks the opponent's trajectory and advances
//! exactly once per observed opponent action, no matter how many
//! optimization steps were spent on the belief.

mod baseline;
mod scripted;

pub use baseline::{BaselineAgent, BaselineKind};
pub use scripted::ScriptedPolicy;

use crate::autodiff::{gumbel_softmax_node, softmax_slice, Binding, Graph, NodeId, ParamSet, Tensor};
use crate::envs::{Action, GameSpec, GameState, Observation, PlayerId};
use crate::neural::{GoalVector, PolicyValueNet, RecurrentState};
use crate::rng::{categorical, Stream};

/// Belief about the other player's hidden goal, kept as unconstrained
/// logits so plain gradient descent applies. Zero logits mean a uniform
/// belief.
#[derive(Clone, Debug)]
pub struct GoalEstimate {
    logits: Tensor,
}

impl GoalEstimate {
    pub fn uniform(ngoals: usize) -> Self {
        Self {
            logits: Tensor::zeros(&[ngoals]),
        }
    }

    pub fn logits(&self) -> &Tensor {
        &self.logits
    }

    /// Softmax view: a proper distribution over goals.
    pub fn simplex(&self) -> Tensor {
        Tensor::vector(softmax_slice(self.logits.data()))
    }

    /// Most likely goal; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        self.logits.argmax()
    }

    /// Hard one-hot view of the current argmax, used when acting.
    pub fn decided(&self) -> Tensor {
        Tensor::one_hot(self.logits.len(), self.argmax())
    }

    /// One gradient-descent step on the logits.
    pub fn descend(&mut self, grad: &Tensor, lr: f64) {
        assert_eq!(grad.len(), self.logits.len());
        for (l, g) in self.logits.data_mut().iter_mut().zip(grad.data()) {
            *l -= lr * g;
        }
    }
}

/// How the belief is optimized after each observed opponent action.
#[derive(Clone, Copy, Debug)]
pub struct InferenceConfig {
    /// Optimization steps per observed action.
    pub n_steps: usize,
    /// Learning rate on the belief logits.
    pub lr: f64,
    /// Gumbel-softmax temperature for sampling soft goals.
    pub temperature: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            n_steps: 10,
            lr: 0.1,
            temperature: 1.0,
        }
    }
}

/// One acting step on the episode tape.
#[derive(Clone, Copy, Debug)]
pub struct TapeStep {
    pub policy: NodeId,
    pub value: NodeId,
    /// Index of the action actually taken.
    pub action: usize,
    /// Reward credited to this step (accumulates until the owner acts
    /// again).
    pub reward: f64,
    /// Action-prediction head output, if the architecture has one.
    pub predict: Option<NodeId>,
    /// The opponent action that prediction should have matched; paired
    /// once the opponent moves, left unpaired at episode end.
    pub predict_target: Option<usize>,
}

/// Growing autodiff graph spanning one episode of acting, so the
/// end-of-episode update can backpropagate through every step of the
/// recurrent core.
pub struct EpisodeTape {
    pub graph: Graph,
    pub binding: Binding,
    rec: (NodeId, NodeId),
    pub steps: Vec<TapeStep>,
}

impl EpisodeTape {
    pub fn new(params: &ParamSet, hidden: usize) -> Self {
        let mut graph = Graph::new();
        let binding = params.bind(&mut graph);
        let rec = RecurrentState::zeros(hidden).enter(&mut graph);
        Self {
            graph,
            binding,
            rec,
            steps: Vec::new(),
        }
    }

    pub fn rec(&self) -> (NodeId, NodeId) {
        self.rec
    }

    pub fn record(
        &mut self,
        policy: NodeId,
        value: NodeId,
        predict: Option<NodeId>,
        rec: (NodeId, NodeId),
        action: usize,
    ) {
        self.rec = rec;
        self.steps.push(TapeStep {
            policy,
            value,
            action,
            reward: 0.0,
            predict,
            predict_target: None,
        });
    }

    /// Credit a reward to the latest own step. Rewards arriving before
    /// the first own action have nothing to credit and are dropped.
    pub fn add_reward(&mut self, r: f64) {
        if let Some(step) = self.steps.last_mut() {
            step.reward += r;
        }
    }

    /// Pair the newest unpaired prediction with the opponent action
    /// that followed it.
    pub fn pair_prediction(&mut self, target: usize) {
        if let Some(step) = self.steps.last_mut() {
            if step.predict.is_some() && step.predict_target.is_none() {
                step.predict_target = Some(target);
            }
        }
    }
}

/// The self-modeling agent.
pub struct SomAgent {
    pub spec: GameSpec,
    pub params: ParamSet,
    pub net: PolicyValueNet,
    pub infer: InferenceConfig,
    pub hidden: usize,
    goal: usize,
    z_self: Tensor,
    pub estimate: GoalEstimate,
    rec_other: RecurrentState,
    pub tape: Option<EpisodeTape>,
    rec_other_advances: usize,
}

impl SomAgent {
    pub fn new(spec: &GameSpec, hidden: usize, infer: InferenceConfig, rng: &mut Stream) -> Self {
        let mut params = ParamSet::new();
        let net = PolicyValueNet::new(
            &mut params,
            "net.",
            spec.nfeatures(),
            spec.ngoals(),
            hidden,
            spec.nactions(),
            rng,
        );
        let ngoals = spec.ngoals();
        Self {
            spec: spec.clone(),
            params,
            net,
            infer,
            hidden,
            goal: 0,
            z_self: Tensor::one_hot(ngoals, 0),
            estimate: GoalEstimate::uniform(ngoals),
            rec_other: RecurrentState::zeros(hidden),
            tape: None,
            rec_other_advances: 0,
        }
    }

    pub fn begin_episode(&mut self, goal: usize) {
        self.goal = goal;
        self.z_self = Tensor::one_hot(self.spec.ngoals(), goal);
        self.estimate = GoalEstimate::uniform(self.spec.ngoals());
        self.rec_other = RecurrentState::zeros(self.hidden);
        self.tape = Some(EpisodeTape::new(&self.params, self.hidden));
        self.rec_other_advances = 0;
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    /// Opponent-trajectory recurrent state advances this episode; one
    /// per observed opponent action.
    pub fn rec_other_advances(&self) -> usize {
        self.rec_other_advances
    }

    pub fn rec_other(&self) -> &RecurrentState {
        &self.rec_other
    }

    /// Act on the episode tape: own goal in the own slot, the hard
    /// belief argmax in the other slot, action sampled from the policy.
    pub fn act(&mut self, obs: &Observation, rng: &mut Stream) -> usize {
        let tape = self.tape.as_mut().expect("begin_episode first");
        let rec = tape.rec();
        let s = tape.graph.input(obs.features.clone());
        let zs = tape.graph.input(self.z_self.clone());
        let zo = tape.graph.input(self.estimate.decided());
        let step = self
            .net
            .forward(&mut tape.graph, &tape.binding, s, zs, zo, rec)
            .expect("dimensions fixed at construction");
        let probs = tape.graph.value(step.policy).data().to_vec();
        let action = categorical(&probs, rng);
        tape.record(step.policy, step.value, None, (step.h, step.c), action);
        action
    }

    /// Update the belief from one observed opponent action, then
    /// advance the opponent-trajectory state once.
    ///
    /// `obs_other` must be the pre-action board from the opponent's
    /// perspective. Network parameters are read-only here; the only
    /// thing optimized is the belief.
    pub fn observe_other(&mut self, obs_other: &Observation, action: usize, rng: &mut Stream) {
        let mut graph = Graph::new();
        let binding = self.params.bind(&mut graph);
        // Saved opponent state; every optimization step restarts from
        // these same nodes.
        let rec0 = self.rec_other.enter(&mut graph);
        let s = graph.input(obs_other.features.clone());
        let z_self = graph.input(self.z_self.clone());

        for _ in 0..self.infer.n_steps {
            let logits = graph.leaf(self.estimate.logits().clone());
            let z_tilde = gumbel_softmax_node(&mut graph, logits, self.infer.temperature, rng);
            let step = self
                .net
                .forward(&mut graph, &binding, s, z_tilde, z_self, rec0)
                .expect("dimensions fixed at construction");
            let loss = graph.cross_entropy(step.policy, action);
            graph.backward(loss).expect("loss is scalar");
            let grad = graph
                .grad(logits)
                .expect("belief logits receive gradient")
                .clone();
            self.estimate.descend(&grad, self.infer.lr);
        }

        let z_soft = graph.input(self.estimate.simplex());
        let step = self
            .net
            .forward(&mut graph, &binding, s, z_soft, z_self, rec0)
            .expect("dimensions fixed at construction");
        self.rec_other = RecurrentState::read(&graph, step.h, step.c);
        self.rec_other_advances += 1;
    }

    /// Evaluation forward without a tape: returns the policy the agent
    /// would act from right now, given a recurrent state it manages
    /// externally.
    pub fn policy_values(
        &self,
        obs: &Observation,
        rec: &RecurrentState,
    ) -> (Tensor, f64, RecurrentState) {
        let z_own = GoalVector::one_hot(self.spec.ngoals(), self.goal);
        let z_other = GoalVector::from_simplex(self.estimate.decided());
        self.net
            .forward_values(&self.params, &obs.features, &z_own, &z_other, rec)
            .expect("dimensions fixed at construction")
    }
}

/// Uniform dispatch over every kind of player the training and
/// evaluation loops can seat at the table.
pub enum Player {
    Som(SomAgent),
    Baseline(BaselineAgent),
    Scripted(ScriptedPolicy),
}

impl Player {
    pub fn begin_episode(&mut self, state: &GameState, me: PlayerId) {
        match self {
            Player::Som(a) => a.begin_episode(state.goal_of(me)),
            Player::Baseline(a) => a.begin_episode(state.goal_of(me)),
            Player::Scripted(_) => {}
        }
    }

    /// Choose an action for `me` in the current (pre-action) state.
    pub fn act(&mut self, state: &GameState, me: PlayerId, rng: &mut Stream) -> Action {
        let idx = match self {
            Player::Som(a) => {
                let obs = state.observe(me);
                a.act(&obs, rng)
            }
            Player::Baseline(a) => a.act(state, me, rng),
            Player::Scripted(p) => {
                let action = p.act(state, me);
                return action;
            }
        };
        state.spec().actions()[idx]
    }

    /// Told that the opponent chose `action` in the (pre-action) state.
    pub fn observe_other(
        &mut self,
        state: &GameState,
        me: PlayerId,
        action: Action,
        rng: &mut Stream,
    ) {
        let idx = state
            .spec()
            .action_index(action)
            .expect("observed action comes from this game");
        match self {
            Player::Som(a) => {
                let obs = state.observe(1 - me);
                a.observe_other(&obs, idx, rng);
            }
            Player::Baseline(a) => a.note_other_action(idx),
            Player::Scripted(_) => {}
        }
    }

    /// Credit a reward to the player's latest own step, if it keeps a
    /// tape.
    pub fn add_reward(&mut self, r: f64) {
        if let Some(tape) = self.tape_mut() {
            tape.add_reward(r);
        }
    }

    pub fn tape_mut(&mut self) -> Option<&mut EpisodeTape> {
        match self {
            Player::Som(a) => a.tape.as_mut(),
            Player::Baseline(a) => a.tape.as_mut(),
            Player::Scripted(_) => None,
        }
    }

    pub fn take_tape(&mut self) -> Option<EpisodeTape> {
        match self {
            Player::Som(a) => a.tape.take(),
            Player::Baseline(a) => a.tape.take(),
            Player::Scripted(_) => None,
        }
    }

    pub fn params(&self) -> Option<&ParamSet> {
        match self {
            Player::Som(a) => Some(&a.params),
            Player::Baseline(a) => Some(&a.params),
            Player::Scripted(_) => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<&mut ParamSet> {
        match self {
            Player::Som(a) => Some(&mut a.params),
            Player::Baseline(a) => Some(&mut a.params),
            Player::Scripted(_) => None,
        }
    }

    /// Current belief argmax, for inference-accuracy bookkeeping.
    pub fn estimated_goal(&self) -> Option<usize> {
        match self {
            Player::Som(a) => Some(a.estimate.argmax()),
            _ => None,
        }
    }
}
