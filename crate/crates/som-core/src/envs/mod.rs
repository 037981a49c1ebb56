//! Two-player turn-based grid games behind one interface.
//!
//! All three games share the same skeleton: a small grid, strict turn
//! alternation with a seed-randomized first actor, per-player hidden
//! goals, and few-hot plane-encoded observations in which only the
//! self/other planes depend on the viewer. Invalid moves (walls, closed
//! doors) leave the actor in place but still consume the turn.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row; `up`
//! decreases `y`. Observations flatten plane-major, row-major inside a
//! plane: `index = plane * w * h + y * w + x`.

mod coin;
mod door;
mod recipe;
mod replay;
#[cfg(test)]
mod tests;

pub use coin::{CoinConfig, NCOLORS};
pub use door::{GOAL_BONUS, STEP_COST};
pub use recipe::{recipe_needs, NTYPES as NITEM_TYPES};
pub use replay::{EpisodeReplay, ReplayError, ReplayStep};

use thiserror::Error;

use crate::autodiff::Tensor;
use crate::rng::{stream, Stream};

pub type PlayerId = usize;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("player {got} acted out of turn (turn belongs to {expected})")]
    OutOfTurn { expected: PlayerId, got: PlayerId },
    #[error("the game is already over")]
    GameOver,
    #[error("action {action:?} is not part of this game's action set")]
    UnsupportedAction { action: Action },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Pass,
    Pick,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::Pass => "pass",
            Action::Pick => "pick",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "up" => Action::Up,
            "down" => Action::Down,
            "left" => Action::Left,
            "right" => Action::Right,
            "pass" => Action::Pass,
            "pick" => Action::Pick,
            _ => return None,
        })
    }

    /// Displacement of a movement action.
    pub fn delta(self) -> Option<(i32, i32)> {
        Some(match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            _ => return None,
        })
    }
}

/// Movement plus pass; the action set of Coin and Door.
pub const MOVE_ACTIONS: [Action; 5] = [
    Action::Up,
    Action::Down,
    Action::Left,
    Action::Right,
    Action::Pass,
];

/// Movement, pass and pick; the action set of Recipe.
pub const PICK_ACTIONS: [Action; 6] = [
    Action::Up,
    Action::Down,
    Action::Left,
    Action::Right,
    Action::Pass,
    Action::Pick,
];

/// Which game, plus any per-game sizing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GameSpec {
    Coin(CoinConfig),
    Recipe,
    Door,
}

impl GameSpec {
    pub fn coin_default() -> Self {
        GameSpec::Coin(CoinConfig::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            GameSpec::Coin(_) => "coin",
            GameSpec::Recipe => "recipe",
            GameSpec::Door => "door",
        }
    }

    pub fn grid(&self) -> (usize, usize) {
        match self {
            GameSpec::Coin(c) => (c.width, c.height),
            GameSpec::Recipe => (6, 4),
            GameSpec::Door => (9, 5),
        }
    }

    pub fn ngoals(&self) -> usize {
        match self {
            GameSpec::Coin(_) => 3,
            GameSpec::Recipe => 4,
            GameSpec::Door => 5,
        }
    }

    pub fn actions(&self) -> &'static [Action] {
        match self {
            GameSpec::Recipe => &PICK_ACTIONS,
            _ => &MOVE_ACTIONS,
        }
    }

    pub fn nactions(&self) -> usize {
        self.actions().len()
    }

    pub fn action_index(&self, a: Action) -> Option<usize> {
        self.actions().iter().position(|&x| x == a)
    }

    /// Observation planes: object planes, self, other, then zero spares.
    pub fn nplanes(&self) -> usize {
        match self {
            GameSpec::Coin(_) => 6,
            GameSpec::Recipe => 8,
            GameSpec::Door => 20,
        }
    }

    pub fn nfeatures(&self) -> usize {
        let (w, h) = self.grid();
        w * h * self.nplanes()
    }

    /// Total game steps in an episode (each player acts in half of
    /// them).
    pub fn total_steps(&self) -> usize {
        match self {
            GameSpec::Coin(_) => 20,
            GameSpec::Recipe => 50,
            GameSpec::Door => 22,
        }
    }

    /// Default LSTM width used for this game's agents.
    pub fn default_hidden(&self) -> usize {
        match self {
            GameSpec::Door => 128,
            _ => 64,
        }
    }
}

/// How hidden goals are assigned at reset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoalAssignment {
    /// Coin: two distinct colors. Recipe: recipes that share an item
    /// type. Door: independent uniform draws.
    Standard,
    /// Recipe only: the two recipes share no item type (the pretraining
    /// variant). Other games treat this as `Standard`.
    NonOverlapping,
    /// Pin both goals, for harnesses and tests.
    Fixed([usize; 2]),
}

/// What happened during one game step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    CoinTaken {
        color: usize,
        x: usize,
        y: usize,
    },
    ItemTaken {
        item: usize,
        x: usize,
        y: usize,
    },
    GoalReached,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub events: Vec<Event>,
    /// Reward delivered to each player by this step (terminal rewards
    /// arrive on the final step).
    pub rewards: [f64; 2],
    pub done: bool,
}

/// Flattened few-hot observation from one player's perspective.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub features: Tensor,
    pub perspective: PlayerId,
}

#[derive(Clone, Debug)]
enum Inner {
    Coin(coin::CoinState),
    Recipe(recipe::RecipeState),
    Door(door::DoorState),
}

/// A live episode: per-game state plus the shared turn bookkeeping.
#[derive(Clone, Debug)]
pub struct GameState {
    spec: GameSpec,
    inner: Inner,
    goals: [usize; 2],
    turn: PlayerId,
    first_actor: PlayerId,
    steps_taken: usize,
    over: bool,
}

impl GameState {
    /// Deterministically build an episode from a seed. Identical
    /// arguments always produce the identical state.
    pub fn reset(spec: &GameSpec, seed: u64, assign: GoalAssignment) -> Self {
        let mut rng = stream(seed);
        if let GoalAssignment::Fixed(goals) = assign {
            for &g in &goals {
                assert!(g < spec.ngoals(), "fixed goal {g} out of range");
            }
        }
        let (inner, goals) = match spec {
            GameSpec::Coin(cfg) => {
                let (st, goals) = coin::CoinState::reset(cfg, assign, &mut rng);
                (Inner::Coin(st), goals)
            }
            GameSpec::Recipe => {
                let (st, goals) = recipe::RecipeState::reset(assign, &mut rng);
                (Inner::Recipe(st), goals)
            }
            GameSpec::Door => {
                let (st, goals) = door::DoorState::reset(assign, &mut rng);
                (Inner::Door(st), goals)
            }
        };
        let first_actor = usize::from(rand::Rng::gen::<bool>(&mut rng));
        Self {
            spec: spec.clone(),
            inner,
            goals,
            turn: first_actor,
            first_actor,
            steps_taken: 0,
            over: false,
        }
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn goals(&self) -> [usize; 2] {
        self.goals
    }

    pub fn goal_of(&self, player: PlayerId) -> usize {
        self.goals[player]
    }

    pub fn acting_agent(&self) -> PlayerId {
        self.turn
    }

    pub fn first_actor(&self) -> PlayerId {
        self.first_actor
    }

    pub fn is_over(&self) -> bool {
        self.over
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Encode the board for one player. Only the self and other planes
    /// differ between perspectives; goals are never encoded.
    pub fn observe(&self, perspective: PlayerId) -> Observation {
        assert!(perspective < 2, "player index {perspective}");
        let features = match &self.inner {
            Inner::Coin(st) => st.encode(perspective),
            Inner::Recipe(st) => st.encode(perspective),
            Inner::Door(st) => st.encode(perspective),
        };
        Observation {
            features: Tensor::vector(features),
            perspective,
        }
    }

    /// Apply `actor`'s action. Turn order is enforced; invalid moves
    /// waste the turn rather than erroring.
    pub fn step(&mut self, actor: PlayerId, action: Action) -> Result<StepOutcome, EnvError> {
        if self.over {
            return Err(EnvError::GameOver);
        }
        if actor != self.turn {
            return Err(EnvError::OutOfTurn {
                expected: self.turn,
                got: actor,
            });
        }
        if self.spec.action_index(action).is_none() {
            return Err(EnvError::UnsupportedAction { action });
        }

        let mut events = Vec::new();
        let mut rewards = [0.0; 2];
        let mut terminal = false;

        match &mut self.inner {
            Inner::Coin(st) => st.apply(actor, action, &mut events),
            Inner::Recipe(st) => st.apply(actor, action, &mut events),
            Inner::Door(st) => {
                st.apply(actor, action, self.goals[actor], &mut events, &mut rewards);
                if events.contains(&Event::GoalReached) {
                    terminal = true;
                }
            }
        }

        self.steps_taken += 1;
        let out_of_time = self.steps_taken >= self.spec.total_steps();
        if terminal || out_of_time {
            self.over = true;
            match &self.inner {
                Inner::Coin(st) => {
                    let r = st.terminal_reward(&self.goals);
                    rewards[0] += r;
                    rewards[1] += r;
                }
                Inner::Recipe(st) => {
                    for p in 0..2 {
                        rewards[p] += st.terminal_reward(p, self.goals[p]);
                    }
                }
                Inner::Door(_) => {
                    if terminal {
                        rewards[0] += door::GOAL_BONUS;
                        rewards[1] += door::GOAL_BONUS;
                    }
                }
            }
        } else {
            self.turn = 1 - self.turn;
        }

        Ok(StepOutcome {
            events,
            rewards,
            done: self.over,
        })
    }

    /// Whether `player` achieved its individual objective (Recipe: the
    /// recipe was crafted; Door: the goal was reached; Coin has no
    /// per-player win notion).
    pub fn won(&self, player: PlayerId) -> bool {
        match &self.inner {
            Inner::Coin(_) => false,
            Inner::Recipe(st) => st.crafted(player, self.goals[player]),
            Inner::Door(st) => st.reached_goal,
        }
    }

    /// Coin only: how many coins of each color each player collected,
    /// indexed `[player][color]`.
    pub fn coin_counts(&self) -> Option<[[usize; 3]; 2]> {
        match &self.inner {
            Inner::Coin(st) => Some(st.counts),
            _ => None,
        }
    }

    /// Coin only: coins of each color still on the board.
    pub fn coins_remaining(&self) -> Option<[usize; 3]> {
        match &self.inner {
            Inner::Coin(st) => Some(st.remaining()),
            _ => None,
        }
    }

    pub fn agent_position(&self, player: PlayerId) -> (usize, usize) {
        match &self.inner {
            Inner::Coin(st) => st.positions[player],
            Inner::Recipe(st) => st.positions[player],
            Inner::Door(st) => st.positions[player],
        }
    }

    /// Coin only: `(x, y, color)` of every coin still on the board.
    pub fn coin_positions(&self) -> Option<&[(usize, usize, usize)]> {
        match &self.inner {
            Inner::Coin(st) => Some(&st.coins),
            _ => None,
        }
    }

    /// Recipe only: `(x, y, type)` of every item still on the board.
    pub fn item_positions(&self) -> Option<&[(usize, usize, usize)]> {
        match &self.inner {
            Inner::Recipe(st) => Some(&st.items),
            _ => None,
        }
    }

    /// Recipe only: items picked so far by `player`, indexed by type.
    pub fn inventory(&self, player: PlayerId) -> Option<[usize; recipe::NTYPES]> {
        match &self.inner {
            Inner::Recipe(st) => Some(st.inventory[player]),
            _ => None,
        }
    }
}

/// Clip a movement to the grid; `None` means the move leaves the grid.
fn offset(pos: (usize, usize), delta: (i32, i32), w: usize, h: usize) -> Option<(usize, usize)> {
    let nx = pos.0 as i32 + delta.0;
    let ny = pos.1 as i32 + delta.1;
    if nx < 0 || ny < 0 || nx >= w as i32 || ny >= h as i32 {
        None
    } else {
        Some((nx as usize, ny as usize))
    }
}

/// Sample `count` distinct cell indices from a `w x h` grid, excluding
/// `taken`, via partial Fisher-Yates on the free cells.
fn sample_distinct_cells(
    w: usize,
    h: usize,
    count: usize,
    taken: &[(usize, usize)],
    rng: &mut Stream,
) -> Vec<(usize, usize)> {
    let mut free: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|c| !taken.contains(c))
        .collect();
    assert!(count <= free.len(), "grid too small for {count} placements");
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let j = rand::Rng::gen_range(rng, i..free.len());
        free.swap(i, j);
        out.push(free[i]);
    }
    out
}
