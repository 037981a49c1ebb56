//! Recipe game: each player must gather the ingredients of a private
//! recipe from a shared pantry.
//!
//! The board is 6 wide and 4 tall. One item of each of the four types
//! lands on a random cell in columns 1..=2 and is mirrored into columns
//! 3..=4, so each type appears exactly twice. The players start on the
//! far columns 0 and 5 in the same row.
//!
//! Recipe `r` needs two items of type `r` and one of type `(r + 1) % 4`.
//! Under standard assignment the players get cyclically adjacent
//! recipes, which always share an item type, so grabbing the wrong copy
//! can starve the partner. Non-overlapping assignment hands out opposite
//! recipes instead; that variant has no contention and is the
//! pretraining curriculum.
//!
//! At the end of the episode a player scores +1 if its inventory covers
//! the recipe, minus 0.1 per item picked beyond what the recipe needs.

use super::{offset, sample_distinct_cells, Action, Event, GoalAssignment, PlayerId};
use crate::rng::Stream;
use rand::Rng;

pub const WIDTH: usize = 6;
pub const HEIGHT: usize = 4;
pub const NTYPES: usize = 4;

/// Ingredient multiset of recipe `r`, indexed by item type.
pub fn recipe_needs(r: usize) -> [usize; NTYPES] {
    let mut needs = [0; NTYPES];
    needs[r] = 2;
    needs[(r + 1) % NTYPES] = 1;
    needs
}

#[derive(Clone, Debug)]
pub struct RecipeState {
    pub(super) positions: [(usize, usize); 2],
    /// Items still on the board as `(x, y, type)`.
    pub(super) items: Vec<(usize, usize, usize)>,
    /// Items picked so far, indexed `[player][type]`.
    pub(super) inventory: [[usize; NTYPES]; 2],
}

impl RecipeState {
    pub fn reset(assign: GoalAssignment, rng: &mut Stream) -> (Self, [usize; 2]) {
        // One cell per type in the left pantry block, mirrored right.
        let taken: Vec<(usize, usize)> = (0..HEIGHT)
            .flat_map(|y| [(0, y), (3, y), (4, y), (5, y)])
            .collect();
        let left = sample_distinct_cells(WIDTH, HEIGHT, NTYPES, &taken, rng);
        let mut items = Vec::with_capacity(2 * NTYPES);
        for (ty, &(x, y)) in left.iter().enumerate() {
            items.push((x, y, ty));
            items.push((WIDTH - 1 - x, y, ty));
        }

        let row = rng.gen_range(0..HEIGHT);
        let mut positions = [(0, row), (WIDTH - 1, row)];
        if rng.gen::<bool>() {
            positions.swap(0, 1);
        }

        let goals = match assign {
            GoalAssignment::Fixed(goals) => goals,
            GoalAssignment::NonOverlapping => {
                let r0 = rng.gen_range(0..NTYPES);
                [r0, (r0 + 2) % NTYPES]
            }
            GoalAssignment::Standard => {
                let r0 = rng.gen_range(0..NTYPES);
                let r1 = if rng.gen::<bool>() {
                    (r0 + 1) % NTYPES
                } else {
                    (r0 + NTYPES - 1) % NTYPES
                };
                [r0, r1]
            }
        };

        (
            Self {
                positions,
                items,
                inventory: [[0; NTYPES]; 2],
            },
            goals,
        )
    }

    pub fn apply(&mut self, actor: PlayerId, action: Action, events: &mut Vec<Event>) {
        if let Some(delta) = action.delta() {
            if let Some(dest) = offset(self.positions[actor], delta, WIDTH, HEIGHT) {
                self.positions[actor] = dest;
            }
        } else if action == Action::Pick {
            let here = self.positions[actor];
            if let Some(i) = self.items.iter().position(|&(x, y, _)| (x, y) == here) {
                let (x, y, item) = self.items.remove(i);
                self.inventory[actor][item] += 1;
                events.push(Event::ItemTaken { item, x, y });
            }
        }
    }

    pub fn crafted(&self, player: PlayerId, recipe: usize) -> bool {
        let needs = recipe_needs(recipe);
        (0..NTYPES).all(|t| self.inventory[player][t] >= needs[t])
    }

    pub fn terminal_reward(&self, player: PlayerId, recipe: usize) -> f64 {
        let needs = recipe_needs(recipe);
        let excess: usize = (0..NTYPES)
            .map(|t| self.inventory[player][t].saturating_sub(needs[t]))
            .sum();
        let crafted = if self.crafted(player, recipe) { 1.0 } else { 0.0 };
        crafted - 0.1 * excess as f64
    }

    /// Planes: item types 0..4, self, other, two spares.
    pub fn encode(&self, perspective: PlayerId) -> Vec<f64> {
        let area = WIDTH * HEIGHT;
        let mut f = vec![0.0; 8 * area];
        let at = |x: usize, y: usize| y * WIDTH + x;
        for &(x, y, ty) in &self.items {
            f[ty * area + at(x, y)] = 1.0;
        }
        let (sx, sy) = self.positions[perspective];
        let (ox, oy) = self.positions[1 - perspective];
        f[4 * area + at(sx, sy)] = 1.0;
        f[5 * area + at(ox, oy)] = 1.0;
        f
    }
}
