//! Episode rollout and the advantage actor-critic update.
//!
//! One episode is one autodiff graph: each player records its acting
//! steps on an [`EpisodeTape`], and at episode end [`episode_loss`]
//! builds a scalar loss over the whole tape so the backward pass runs
//! through every recurrent step. Updates are applied per episode with
//! Adam.
//!
//! `workers` emulates asynchronous learners on one thread: each round of
//! W episodes is played against the parameter snapshot taken at round
//! start, while the updates land on the shared values sequentially. With
//! one worker this degenerates to the plain loop and is bit-reproducible
//! for a fixed seed.

mod adam;
pub mod pretrain;

pub use adam::{AdamConfig, AdamState};

use crate::agents::{EpisodeTape, Player, TapeStep};
use crate::autodiff::{ParamSet, Tensor};
use crate::envs::{EpisodeReplay, GameSpec, GameState, GoalAssignment};
use crate::rng::{self, Stream};
use crate::NodeId;

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    /// Discount on the per-step reward sequence of one player.
    pub gamma: f64,
    /// Weight on the entropy bonus (subtracted from the loss).
    pub entropy_coef: f64,
    /// Weight on the squared advantage.
    pub value_coef: f64,
    /// Weight on the opponent-action prediction loss, for
    /// architectures that have a prediction head.
    pub aux_coef: f64,
    pub adam: AdamConfig,
    /// Emulated asynchronous learners. 1 trains inline.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            entropy_coef: 0.01,
            value_coef: 0.5,
            aux_coef: 1.0,
            adam: AdamConfig::default(),
            workers: 1,
        }
    }
}

/// Everything the caller might want to know about one finished episode.
#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub goals: [usize; 2],
    pub rewards: [f64; 2],
    pub won: [bool; 2],
    /// Per-color pickup counts, coin game only.
    pub coin_counts: Option<[[usize; 3]; 2]>,
    /// Belief argmax after each observed opponent action, per seat;
    /// empty for players that do not infer goals.
    pub estimates: [Vec<usize>; 2],
    /// Training loss per seat, filled in by [`train`].
    pub losses: [Option<f64>; 2],
    pub replay: EpisodeReplay,
}

/// G_t = r_t + gamma * G_{t+1}, one return per recorded step.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut g = 0.0;
    for (i, &r) in rewards.iter().enumerate().rev() {
        g = r + gamma * g;
        out[i] = g;
    }
    out
}

/// Scalar episode loss over a tape:
///
/// ```text
/// sum_t  -log pi(a_t) * stopgrad(G_t - V_t)
///      + value_coef * (G_t - V_t)^2
///      - entropy_coef * H(pi_t)
///      + aux_coef * -log p(next opponent action)   (prediction heads)
/// ```
///
/// The advantage in the policy term is detached so the value head is
/// trained only by its own squared error. Returns `None` for a tape
/// with no steps.
pub fn episode_loss(tape: &mut EpisodeTape, cfg: &TrainConfig) -> Option<NodeId> {
    build_loss(tape, cfg, None)
}

/// The episode loss with the policy-term weights entered as the given
/// plain constants instead of the live detached advantages.
///
/// Training never calls this. It exists for finite-difference
/// verification: the detached advantage still moves when a parameter is
/// nudged, so the differenced loss is not the function the analytic
/// gradient describes. Pinning the weights (to [`advantage_values`] of
/// the unperturbed tape) makes the two agree; that the pinned and live
/// losses have identical gradients at the base point is asserted
/// separately in the tests.
pub fn pinned_advantage_loss(
    tape: &mut EpisodeTape,
    cfg: &TrainConfig,
    advantages: &[f64],
) -> Option<NodeId> {
    build_loss(tape, cfg, Some(advantages))
}

/// G_t − V_t per step of a finished tape, the weights the policy term
/// sees after detaching.
pub fn advantage_values(tape: &EpisodeTape, gamma: f64) -> Vec<f64> {
    let rewards: Vec<f64> = tape.steps.iter().map(|s| s.reward).collect();
    let returns = discounted_returns(&rewards, gamma);
    tape.steps
        .iter()
        .zip(&returns)
        .map(|(s, g)| g - tape.graph.value(s.value).item())
        .collect()
}

fn build_loss(tape: &mut EpisodeTape, cfg: &TrainConfig, pinned: Option<&[f64]>) -> Option<NodeId> {
    if tape.steps.is_empty() {
        return None;
    }
    let steps: Vec<TapeStep> = tape.steps.clone();
    let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
    let returns = discounted_returns(&rewards, cfg.gamma);
    let g = &mut tape.graph;
    let mut terms = Vec::with_capacity(steps.len() * 4);
    for (t, (step, &ret)) in steps.iter().zip(&returns).enumerate() {
        let target = g.input(Tensor::scalar(ret));
        let adv = g.sub(target, step.value);
        let adv_stop = match pinned {
            None => g.detach(adv),
            Some(a) => g.input(Tensor::scalar(a[t])),
        };
        let ce = g.cross_entropy(step.policy, step.action);
        terms.push(g.mul(ce, adv_stop));
        let adv_sq = g.mul(adv, adv);
        terms.push(g.scale(adv_sq, cfg.value_coef));
        // sum p log p is -H, so adding it scaled by entropy_coef is the
        // entropy bonus.
        let logp = g.log(step.policy);
        let plogp = g.mul(step.policy, logp);
        let neg_entropy = g.sum(plogp);
        terms.push(g.scale(neg_entropy, cfg.entropy_coef));
        if let (Some(pred), Some(target)) = (step.predict, step.predict_target) {
            let aux = g.cross_entropy(pred, target);
            terms.push(g.scale(aux, cfg.aux_coef));
        }
    }
    Some(g.sum_scalars(&terms))
}

/// Backpropagate a finished tape and apply one Adam step. Returns the
/// loss value, or `None` when the tape recorded no steps.
pub fn update_from_tape(
    params: &mut ParamSet,
    adam: &mut AdamState,
    mut tape: EpisodeTape,
    cfg: &TrainConfig,
) -> Option<f64> {
    let loss = episode_loss(&mut tape, cfg)?;
    tape.graph.backward(loss).expect("episode loss is a scalar");
    params.zero_grads();
    params.accumulate_grads(&tape.graph, &tape.binding);
    adam.step(params);
    Some(tape.graph.value(loss).item())
}

/// Pure per-episode seed derivation (splitmix64 over the pair), so
/// runs that differ only in agent settings still see identical boards.
pub fn episode_seed(run_seed: u64, episode: u64) -> u64 {
    let mut z = run_seed ^ episode.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Play one episode under the canonical turn protocol: the actor picks
/// an action from the pre-action state, the bystander observes that
/// same state plus the chosen action, then the action is applied and
/// both players are credited the step rewards.
pub fn run_episode(
    players: &mut [Player; 2],
    spec: &GameSpec,
    assign: GoalAssignment,
    seed: u64,
    rng: &mut Stream,
) -> EpisodeOutcome {
    let mut state = GameState::reset(spec, seed, assign);
    let mut replay = EpisodeReplay::begin(&state, seed, assign);
    players[0].begin_episode(&state, 0);
    players[1].begin_episode(&state, 1);
    let mut rewards = [0.0; 2];
    let mut estimates: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    while !state.is_over() {
        let actor = state.acting_agent();
        let other = 1 - actor;
        let action = players[actor].act(&state, actor, rng);
        players[other].observe_other(&state, other, action, rng);
        if let Some(belief) = players[other].estimated_goal() {
            estimates[other].push(belief);
        }
        let out = state
            .step(actor, action)
            .expect("the acting player chose a legal action kind");
        replay.push(actor, action, &out.events, out.rewards);
        for (p, r) in out.rewards.iter().enumerate() {
            rewards[p] += r;
            players[p].add_reward(*r);
        }
    }
    EpisodeOutcome {
        seed,
        goals: state.goals(),
        rewards,
        won: [state.won(0), state.won(1)],
        coin_counts: state.coin_counts(),
        estimates,
        losses: [None, None],
        replay,
    }
}

/// Train a fixed pair of players against each other.
///
/// Episode `e` always plays on board `episode_seed(seed, e)` with its
/// own action stream, so two runs with the same seed see the same
/// sequence of boards regardless of what the agents learn.
pub fn train(
    players: &mut [Player; 2],
    spec: &GameSpec,
    assign: GoalAssignment,
    cfg: &TrainConfig,
    episodes: usize,
    seed: u64,
    mut on_episode: impl FnMut(usize, &EpisodeOutcome),
) {
    let mut adam: Vec<Option<AdamState>> = players
        .iter()
        .map(|p| {
            p.params()
                .map(|ps| AdamState::new(ps.scalar_count(), cfg.adam))
        })
        .collect();
    let workers = cfg.workers.max(1);
    let mut done = 0;
    while done < episodes {
        let round = workers.min(episodes - done);
        // With several workers, every episode of the round plays from
        // the values as of round start while updates land sequentially
        // on the shared values.
        let snaps: Vec<Option<Vec<f64>>> = if round > 1 {
            players
                .iter()
                .map(|p| p.params().map(ParamSet::flatten_values))
                .collect()
        } else {
            vec![None, None]
        };
        let mut shared = snaps.clone();
        for w in 0..round {
            let ep = done + w;
            if round > 1 {
                for (player, snap) in players.iter_mut().zip(&snaps) {
                    if let (Some(ps), Some(sv)) = (player.params_mut(), snap.as_ref()) {
                        ps.load_flat(sv);
                    }
                }
            }
            let env_seed = episode_seed(seed, ep as u64);
            let mut play_rng = rng::substream(env_seed, "play");
            let mut outcome = run_episode(players, spec, assign, env_seed, &mut play_rng);
            for p in 0..2 {
                let Some(tape) = players[p].take_tape() else {
                    continue;
                };
                let Some(params) = players[p].params_mut() else {
                    continue;
                };
                if round > 1 {
                    params.load_flat(shared[p].as_ref().expect("tape implies params"));
                }
                outcome.losses[p] =
                    update_from_tape(params, adam[p].as_mut().expect("seen above"), tape, cfg);
                if round > 1 {
                    shared[p] = Some(params.flatten_values());
                }
            }
            on_episode(ep, &outcome);
        }
        done += round;
    }
}

/// Train a pool of players; each episode seats a uniformly random
/// ordered pair of distinct members. Pool updates apply as soon as an
/// episode finishes, so this path ignores `cfg.workers`.
pub fn train_pool(
    pool: &mut [Player],
    spec: &GameSpec,
    assign: GoalAssignment,
    cfg: &TrainConfig,
    episodes: usize,
    seed: u64,
    mut on_episode: impl FnMut(usize, [usize; 2], &EpisodeOutcome),
) {
    assert!(pool.len() >= 2, "a pool needs at least two players");
    let mut adam: Vec<Option<AdamState>> = pool
        .iter()
        .map(|p| {
            p.params()
                .map(|ps| AdamState::new(ps.scalar_count(), cfg.adam))
        })
        .collect();
    let mut pair_rng = rng::substream(seed, "pairs");
    for ep in 0..episodes {
        let i = rand::Rng::gen_range(&mut pair_rng, 0..pool.len());
        let mut j = rand::Rng::gen_range(&mut pair_rng, 0..pool.len() - 1);
        if j >= i {
            j += 1;
        }
        let mut seated = [take_player(pool, i), take_player(pool, j)];
        let env_seed = episode_seed(seed, ep as u64);
        let mut play_rng = rng::substream(env_seed, "play");
        let mut outcome = run_episode(&mut seated, spec, assign, env_seed, &mut play_rng);
        for (seat, player) in seated.iter_mut().enumerate() {
            let Some(tape) = player.take_tape() else {
                continue;
            };
            let Some(params) = player.params_mut() else {
                continue;
            };
            let idx = [i, j][seat];
            outcome.losses[seat] =
                update_from_tape(params, adam[idx].as_mut().expect("seen above"), tape, cfg);
        }
        let [a, b] = seated;
        pool[i] = a;
        pool[j] = b;
        on_episode(ep, [i, j], &outcome);
    }
}

fn take_player(pool: &mut [Player], idx: usize) -> Player {
    std::mem::replace(
        &mut pool[idx],
        Player::Scripted(crate::agents::ScriptedPolicy),
    )
}

#[cfg(test)]
mod tests;
