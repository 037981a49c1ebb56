//! Warm starts: crafting pretraining, weight reuse across
//! architectures, and behavior cloning of the scripted policies.

use crate::agents::{Player, SomAgent};
use crate::autodiff::{Graph, ParamSet, Tensor};
use crate::envs::{GameSpec, GameState, GoalAssignment};
use crate::neural::RecurrentState;
use crate::rng::{self, substream};
use rand::Rng;

use super::{episode_seed, train, AdamConfig, AdamState, TrainConfig};

/// Copy weights by name from a network with a narrower input.
///
/// Same-shaped tensors are copied outright. A matrix that kept its rows
/// but grew wider keeps the shared leading columns and zeroes the new
/// ones, so as long as the extra inputs only ever multiply the zero
/// block the loaded network computes exactly what the source did.
/// Parameters missing from the source keep their fresh initialization.
/// Returns how many tensors were copied.
pub fn warm_start(src: &ParamSet, dst: &mut ParamSet) -> usize {
    let names: Vec<(crate::ParamId, String)> = dst
        .iter()
        .map(|(id, p)| (id, p.name().to_string()))
        .collect();
    let mut copied = 0;
    for (id, name) in names {
        let Some(sid) = src.id(&name) else {
            continue;
        };
        let sv = src.value(sid).clone();
        let dshape = dst.value(id).shape().to_vec();
        if sv.shape() == dshape.as_slice() {
            dst.value_mut(id).data_mut().copy_from_slice(sv.data());
            copied += 1;
        } else if dshape.len() == 2
            && sv.shape().len() == 2
            && dshape[0] == sv.shape()[0]
            && dshape[1] > sv.shape()[1]
        {
            let (rows, scols, dcols) = (dshape[0], sv.shape()[1], dshape[1]);
            let data = dst.value_mut(id).data_mut();
            data.fill(0.0);
            for r in 0..rows {
                data[r * dcols..r * dcols + scols]
                    .copy_from_slice(&sv.data()[r * scols..r * scols + scols]);
            }
            copied += 1;
        }
    }
    copied
}

/// Train a pair on the non-overlapping crafting game, where recipes
/// never compete, and report the crafting rate over the trailing
/// `window` episodes (both seats pooled).
pub fn pretrain_recipe(
    players: &mut [Player; 2],
    cfg: &TrainConfig,
    episodes: usize,
    window: usize,
    seed: u64,
) -> f64 {
    let spec = GameSpec::Recipe;
    let mut crafted = Vec::with_capacity(episodes);
    train(
        players,
        &spec,
        GoalAssignment::NonOverlapping,
        cfg,
        episodes,
        seed,
        |_, outcome| {
            crafted.push(u32::from(outcome.won[0]) + u32::from(outcome.won[1]));
        },
    );
    let tail = crafted.len().saturating_sub(window);
    let hits: u32 = crafted[tail..].iter().sum();
    f64::from(hits) / (2.0 * crafted[tail..].len().max(1) as f64)
}

/// Observation/action pairs from scripted self-play, grouped per seat
/// so recurrent state can be replayed in order.
pub struct CloneDataset {
    pub episodes: Vec<CloneEpisode>,
}

pub struct CloneEpisode {
    pub goals: [usize; 2],
    /// Own acting steps per seat, in play order. Each step pairs the
    /// observation with the scripted action under every candidate goal,
    /// indexed by goal. The action actually played is `labels[goals[seat]]`.
    pub seats: [Vec<(Tensor, Vec<usize>)>; 2],
}

/// Roll out scripted self-play and label every visited state with the
/// scripted action under each candidate goal, not just the assigned one.
/// Goal inference hinges on the policy answering counterfactuals ("what
/// would the script do here if its goal were g"), and those states never
/// carry the wrong goal in plain self-play, so the labeler asks the
/// script directly. With `explore > 0` the rollout sometimes applies a
/// uniformly random action instead of the scripted one (labels are
/// unaffected), spreading the visited states beyond the greedy paths.
pub fn scripted_dataset(
    spec: &GameSpec,
    assign: GoalAssignment,
    episodes: usize,
    seed: u64,
    explore: f64,
) -> CloneDataset {
    assert!((0.0..=1.0).contains(&explore), "explore is a probability");
    let script = crate::agents::ScriptedPolicy;
    let ngoals = spec.ngoals();
    let mut out = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let env_seed = episode_seed(seed, ep as u64);
        let mut state = GameState::reset(spec, env_seed, assign);
        let mut rng = substream(env_seed, "explore");
        let mut seats: [Vec<(Tensor, Vec<usize>)>; 2] = [Vec::new(), Vec::new()];
        while !state.is_over() {
            let actor = state.acting_agent();
            let labels: Vec<usize> = (0..ngoals)
                .map(|g| {
                    spec.action_index(script.act_for(&state, actor, g))
                        .expect("scripted play stays within the game's actions")
                })
                .collect();
            let played = labels[state.goal_of(actor)];
            seats[actor].push((state.observe(actor).features, labels));
            let applied = if explore > 0.0 && rng.gen::<f64>() < explore {
                spec.actions()[rng.gen_range(0..spec.nactions())]
            } else {
                spec.actions()[played]
            };
            state
                .step(actor, applied)
                .expect("every listed action is legal to attempt");
        }
        out.push(CloneEpisode {
            goals: state.goals(),
            seats,
        });
    }
    CloneDataset { episodes: out }
}

/// Fit the agent's network to the dataset by cross-entropy. Every
/// episode is replayed once per candidate goal in the own slot, each
/// sequence scored against that goal's counterfactual labels, so the
/// net is pinned down on wrong-goal hypotheses too. The other slot
/// carries the opponent's true goal throughout. One Adam step per seat
/// per episode per epoch; returns the mean per-step loss of each epoch.
pub fn behavior_clone(
    agent: &mut SomAgent,
    data: &CloneDataset,
    epochs: usize,
    lr: f64,
) -> Vec<f64> {
    let ngoals = agent.spec.ngoals();
    let mut adam = AdamState::new(agent.params.scalar_count(), AdamConfig::with_lr(lr));
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let mut total = 0.0;
        let mut count = 0usize;
        for ep in &data.episodes {
            for me in 0..2 {
                if ep.seats[me].is_empty() {
                    continue;
                }
                let mut graph = Graph::new();
                let binding = agent.params.bind(&mut graph);
                let z_other = graph.input(Tensor::one_hot(ngoals, ep.goals[1 - me]));
                let inputs: Vec<_> = ep.seats[me]
                    .iter()
                    .map(|(obs, _)| graph.input(obs.clone()))
                    .collect();
                let mut terms = Vec::with_capacity(ep.seats[me].len() * ngoals);
                for hypothesis in 0..ngoals {
                    let z_own = graph.input(Tensor::one_hot(ngoals, hypothesis));
                    let mut rec = RecurrentState::zeros(agent.hidden).enter(&mut graph);
                    for (&s, (_, labels)) in inputs.iter().zip(&ep.seats[me]) {
                        let step = agent
                            .net
                            .forward(&mut graph, &binding, s, z_own, z_other, rec)
                            .expect("dataset observations match the network");
                        rec = (step.h, step.c);
                        terms.push(graph.cross_entropy(step.policy, labels[hypothesis]));
                    }
                }
                let loss = graph.sum_scalars(&terms);
                graph.backward(loss).expect("loss is a scalar");
                agent.params.zero_grads();
                agent.params.accumulate_grads(&graph, &binding);
                adam.step(&mut agent.params);
                total += graph.value(loss).item();
                count += terms.len();
            }
        }
        history.push(total / count.max(1) as f64);
    }
    history
}

/// Fraction of dataset steps where the cloned policy's argmax matches
/// the scripted action, replaying recurrent state per seat and checking
/// every goal hypothesis against its own counterfactual labels.
pub fn clone_accuracy(agent: &SomAgent, data: &CloneDataset) -> f64 {
    let ngoals = agent.spec.ngoals();
    let mut hits = 0usize;
    let mut count = 0usize;
    for ep in &data.episodes {
        for me in 0..2 {
            let z_other = crate::neural::GoalVector::one_hot(ngoals, ep.goals[1 - me]);
            for hypothesis in 0..ngoals {
                let z_own = crate::neural::GoalVector::one_hot(ngoals, hypothesis);
                let mut rec = RecurrentState::zeros(agent.hidden);
                for (obs, labels) in &ep.seats[me] {
                    let (policy, _, next) = agent
                        .net
                        .forward_values(&agent.params, obs, &z_own, &z_other, &rec)
                        .expect("dataset observations match the network");
                    if policy.argmax() == labels[hypothesis] {
                        hits += 1;
                    }
                    rec = next;
                    count += 1;
                }
            }
        }
    }
    hits as f64 / count.max(1) as f64
}

/// Deterministic fresh agent for cloning experiments.
pub fn fresh_som(spec: &GameSpec, hidden: usize, n_inference_steps: usize, seed: u64) -> SomAgent {
    let infer = crate::agents::InferenceConfig {
        n_steps: n_inference_steps,
        ..Default::default()
    };
    let mut rng = rng::substream(seed, "init");
    SomAgent::new(spec, hidden, infer, &mut rng)
}
