//! Deterministic goal-greedy opponents.
//!
//! These exist to generate behavior whose hidden goal is legible from
//! the outside: each policy heads straight for whatever its goal says
//! matters. They read the true game state (they are harness fixtures,
//! not learners) and never look at the other player's goal.

use crate::envs::{recipe_needs, Action, GameSpec, GameState, PlayerId};

/// Stateless greedy policy for any of the three games.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScriptedPolicy;

impl ScriptedPolicy {
    pub fn act(&self, state: &GameState, me: PlayerId) -> Action {
        self.act_for(state, me, state.goal_of(me))
    }

    /// The action the script would take if `me`'s goal were `goal`,
    /// regardless of the goal actually assigned. Lets a labeler ask
    /// counterfactual questions about any visited state.
    pub fn act_for(&self, state: &GameState, me: PlayerId, goal: usize) -> Action {
        let here = state.agent_position(me);
        match state.spec() {
            GameSpec::Coin(_) => {
                match nearest(here, state.coin_positions().unwrap(), |c| c == goal) {
                    Some(target) => toward(here, target),
                    None => Action::Pass,
                }
            }
            GameSpec::Recipe => {
                let needs = recipe_needs(goal);
                let inv = state.inventory(me).unwrap();
                let wanted = |t: usize| inv[t] < needs[t];
                let items = state.item_positions().unwrap();
                if items
                    .iter()
                    .any(|&(x, y, t)| (x, y) == here && wanted(t))
                {
                    Action::Pick
                } else {
                    match nearest(here, items, wanted) {
                        Some(target) => toward(here, target),
                        None => Action::Pass,
                    }
                }
            }
            // Loiter in front of the own-goal door; the goal is legible
            // from which row the agent settles in.
            GameSpec::Door => toward(here, (2, goal)),
        }
    }
}

/// Closest tagged object by Manhattan distance; ties break toward the
/// lower (y, x) to stay deterministic.
fn nearest(
    from: (usize, usize),
    objects: &[(usize, usize, usize)],
    mut want: impl FnMut(usize) -> bool,
) -> Option<(usize, usize)> {
    objects
        .iter()
        .filter(|&&(_, _, tag)| want(tag))
        .map(|&(x, y, _)| (x, y))
        .min_by_key(|&(x, y)| (manhattan(from, (x, y)), y, x))
}

fn manhattan(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

/// One greedy step, horizontal leg first.
fn toward(from: (usize, usize), to: (usize, usize)) -> Action {
    if from.0 < to.0 {
        Action::Right
    } else if from.0 > to.0 {
        Action::Left
    } else if from.1 < to.1 {
        Action::Down
    } else if from.1 > to.1 {
        Action::Up
    } else {
        Action::Pass
    }
}
