//! Door game: goals sit behind doors that only the partner can hold
//! open.
//!
//! The board is 9 wide and 5 tall. Column 0 holds one goal cell per
//! row, column 1 the matching doors, and column 8 the matching
//! switches. Door `d` can be walked through only while some agent
//! stands on switch `d`, so reaching a goal requires the other player's
//! cooperation. Players spawn on distinct cells in the middle columns.
//!
//! Every action costs its actor 0.1. The episode ends the moment an
//! agent stands on its own goal cell, paying +3 to both players.

use super::{offset, sample_distinct_cells, Action, Event, GoalAssignment, PlayerId};
use crate::rng::Stream;
use rand::Rng;

pub const WIDTH: usize = 9;
pub const HEIGHT: usize = 5;
pub const NGOALS: usize = 5;
pub const GOAL_BONUS: f64 = 3.0;
pub const STEP_COST: f64 = 0.1;

const GOAL_COL: usize = 0;
const DOOR_COL: usize = 1;
const SWITCH_COL: usize = 8;

#[derive(Clone, Debug)]
pub struct DoorState {
    pub(super) positions: [(usize, usize); 2],
    pub(super) reached_goal: bool,
}

impl DoorState {
    pub fn reset(assign: GoalAssignment, rng: &mut Stream) -> (Self, [usize; 2]) {
        // Spawns stay clear of the goal, door and switch columns.
        let taken: Vec<(usize, usize)> = (0..HEIGHT)
            .flat_map(|y| [(0, y), (1, y), (8, y)])
            .collect();
        let cells = sample_distinct_cells(WIDTH, HEIGHT, 2, &taken, rng);
        let goals = match assign {
            GoalAssignment::Fixed(goals) => goals,
            // Independent draws; shared goals are allowed here.
            _ => [rng.gen_range(0..NGOALS), rng.gen_range(0..NGOALS)],
        };
        (
            Self {
                positions: [cells[0], cells[1]],
                reached_goal: false,
            },
            goals,
        )
    }

    fn door_open(&self, d: usize) -> bool {
        let switch = (SWITCH_COL, d);
        self.positions[0] == switch || self.positions[1] == switch
    }

    pub fn apply(
        &mut self,
        actor: PlayerId,
        action: Action,
        goal: usize,
        events: &mut Vec<Event>,
        rewards: &mut [f64; 2],
    ) {
        rewards[actor] -= STEP_COST;
        if let Some(delta) = action.delta() {
            if let Some(dest) = offset(self.positions[actor], delta, WIDTH, HEIGHT) {
                let blocked = dest.0 == DOOR_COL && !self.door_open(dest.1);
                if !blocked {
                    self.positions[actor] = dest;
                    if dest == (GOAL_COL, goal) {
                        self.reached_goal = true;
                        events.push(Event::GoalReached);
                    }
                }
            }
        }
    }

    /// Planes: goal cells 0..5, open doors 5..10, switches 10..15,
    /// self, other, blocks (none here), two spares.
    pub fn encode(&self, perspective: PlayerId) -> Vec<f64> {
        let area = WIDTH * HEIGHT;
        let mut f = vec![0.0; 20 * area];
        let at = |x: usize, y: usize| y * WIDTH + x;
        for r in 0..NGOALS {
            f[r * area + at(GOAL_COL, r)] = 1.0;
            if self.door_open(r) {
                f[(5 + r) * area + at(DOOR_COL, r)] = 1.0;
            }
            f[(10 + r) * area + at(SWITCH_COL, r)] = 1.0;
        }
        let (sx, sy) = self.positions[perspective];
        let (ox, oy) = self.positions[1 - perspective];
        f[15 * area + at(sx, sy)] = 1.0;
        f[16 * area + at(ox, oy)] = 1.0;
        f
    }
}
