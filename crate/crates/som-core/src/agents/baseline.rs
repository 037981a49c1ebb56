//! Comparison agents sharing the recurrent policy core.
//!
//! * `Tog`: the two-slot architecture fed the opponent's true goal, an
//!   upper reference that skips inference entirely.
//! * `Nom`: no opponent model; the network sees only the board and its
//!   own goal.
//! * `Ipp`: `Nom` plus an action-prediction head trained to guess the
//!   opponent's next move, integrated into the same core.
//! * `Spp`: a separate opponent-prediction network whose hidden state
//!   is fed (detached) to an otherwise `Nom`-shaped policy network, so
//!   prediction features help the policy without the policy loss
//!   steering the predictor.

use super::EpisodeTape;
use crate::autodiff::{NodeId, ParamSet, Tensor};
use crate::envs::{GameSpec, GameState, PlayerId};
use crate::neural::{NetDims, PolicyValueNet, RecurrentCore, RecurrentState};
use crate::rng::{categorical, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    Tog,
    Nom,
    Ipp,
    Spp,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Tog => "tog",
            BaselineKind::Nom => "nom",
            BaselineKind::Ipp => "ipp",
            BaselineKind::Spp => "spp",
        }
    }
}

enum Arch {
    TwoSlot(PolicyValueNet),
    Solo(RecurrentCore),
    Split {
        policy: RecurrentCore,
        opponent: RecurrentCore,
    },
}

pub struct BaselineAgent {
    pub kind: BaselineKind,
    pub spec: GameSpec,
    pub params: ParamSet,
    pub hidden: usize,
    arch: Arch,
    goal: usize,
    z_self: Tensor,
    pub tape: Option<EpisodeTape>,
    /// Opponent-network recurrent nodes on the current tape (`Spp`).
    opp_rec: Option<(NodeId, NodeId)>,
}

impl BaselineAgent {
    pub fn new(kind: BaselineKind, spec: &GameSpec, hidden: usize, rng: &mut Stream) -> Self {
        let mut params = ParamSet::new();
        let nfeatures = spec.nfeatures();
        let ngoals = spec.ngoals();
        let nactions = spec.nactions();
        let arch = match kind {
            BaselineKind::Tog => Arch::TwoSlot(PolicyValueNet::new(
                &mut params,
                "net.",
                nfeatures,
                ngoals,
                hidden,
                nactions,
                rng,
            )),
            BaselineKind::Nom | BaselineKind::Ipp => Arch::Solo(RecurrentCore::new(
                &mut params,
                "net.",
                NetDims {
                    input: nfeatures + ngoals,
                    hidden,
                    nactions,
                },
                kind == BaselineKind::Ipp,
                rng,
            )),
            BaselineKind::Spp => {
                let policy = RecurrentCore::new(
                    &mut params,
                    "net.",
                    NetDims {
                        input: nfeatures + ngoals + hidden,
                        hidden,
                        nactions,
                    },
                    false,
                    rng,
                );
                let opponent = RecurrentCore::new(
                    &mut params,
                    "opp.",
                    NetDims {
                        input: nfeatures + ngoals,
                        hidden,
                        nactions,
                    },
                    true,
                    rng,
                );
                Arch::Split { policy, opponent }
            }
        };
        Self {
            kind,
            spec: spec.clone(),
            params,
            hidden,
            arch,
            goal: 0,
            z_self: Tensor::one_hot(ngoals, 0),
            tape: None,
            opp_rec: None,
        }
    }

    pub fn begin_episode(&mut self, goal: usize) {
        self.goal = goal;
        self.z_self = Tensor::one_hot(self.spec.ngoals(), goal);
        let mut tape = EpisodeTape::new(&self.params, self.hidden);
        self.opp_rec = match self.arch {
            Arch::Split { .. } => Some(RecurrentState::zeros(self.hidden).enter(&mut tape.graph)),
            _ => None,
        };
        self.tape = Some(tape);
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn act(&mut self, state: &GameState, me: PlayerId, rng: &mut Stream) -> usize {
        let obs = state.observe(me);
        let tape = self.tape.as_mut().expect("begin_episode first");
        let rec0 = tape.rec();
        let s = tape.graph.input(obs.features);
        let z = tape.graph.input(self.z_self.clone());

        let (policy, value, predict, rec) = match &self.arch {
            Arch::TwoSlot(net) => {
                let true_other = Tensor::one_hot(self.spec.ngoals(), state.goal_of(1 - me));
                let zo = tape.graph.input(true_other);
                let step = net
                    .forward(&mut tape.graph, &tape.binding, s, z, zo, rec0)
                    .expect("dimensions fixed at construction");
                (step.policy, step.value, None, (step.h, step.c))
            }
            Arch::Solo(core) => {
                let input = tape.graph.concat(&[s, z]);
                let step = core
                    .step(&mut tape.graph, &tape.binding, input, rec0)
                    .expect("dimensions fixed at construction");
                (step.policy, step.value, step.predict, (step.h, step.c))
            }
            Arch::Split { policy, opponent } => {
                let opp_in = tape.graph.concat(&[s, z]);
                let opp = opponent
                    .step(
                        &mut tape.graph,
                        &tape.binding,
                        opp_in,
                        self.opp_rec.expect("begin_episode first"),
                    )
                    .expect("dimensions fixed at construction");
                self.opp_rec = Some((opp.h, opp.c));
                // The policy reads the predictor's features but must
                // not train them.
                let hid = tape.graph.detach(opp.h);
                let pol_in = tape.graph.concat(&[s, z, hid]);
                let step = policy
                    .step(&mut tape.graph, &tape.binding, pol_in, rec0)
                    .expect("dimensions fixed at construction");
                (step.policy, step.value, opp.predict, (step.h, step.c))
            }
        };

        let probs = tape.graph.value(policy).data().to_vec();
        let action = categorical(&probs, rng);
        tape.record(policy, value, predict, rec, action);
        action
    }

    /// The opponent moved; predictive architectures pair their latest
    /// prediction with it.
    pub fn note_other_action(&mut self, action: usize) {
        if matches!(self.kind, BaselineKind::Ipp | BaselineKind::Spp) {
            if let Some(tape) = self.tape.as_mut() {
                tape.pair_prediction(action);
            }
        }
    }
}
