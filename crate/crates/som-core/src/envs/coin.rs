//! Coin game: both players collect colored coins; the shared score
//! arrives once at the end of the episode.
//!
//! Each player is privately assigned one of the three colors. Walking
//! onto a coin collects it. When time runs out both players receive
//!
//! ```text
//! sum over goal colors   (coins of that color either player took)^2
//! minus                  (coins of any other color either took)^2
//! ```
//!
//! so collecting either player's color helps both, and everything else
//! hurts. Reading the partner's intent is worth points.

use super::{offset, sample_distinct_cells, Action, Event, GoalAssignment, PlayerId};
use crate::rng::Stream;
use rand::Rng;

pub const NCOLORS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoinConfig {
    pub width: usize,
    pub height: usize,
    /// Coins placed per color at reset.
    pub coins_per_color: usize,
}

impl Default for CoinConfig {
    fn default() -> Self {
        Self {
            width: 8,
            height: 8,
            coins_per_color: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoinState {
    pub(super) width: usize,
    pub(super) height: usize,
    pub(super) positions: [(usize, usize); 2],
    /// Coins still on the board as `(x, y, color)`.
    pub(super) coins: Vec<(usize, usize, usize)>,
    /// Coins collected so far, indexed `[player][color]`.
    pub(super) counts: [[usize; 3]; 2],
}

impl CoinState {
    pub fn reset(cfg: &CoinConfig, assign: GoalAssignment, rng: &mut Stream) -> (Self, [usize; 2]) {
        assert!(cfg.width >= 2 && cfg.height >= 2, "grid too small");
        let cells = sample_distinct_cells(
            cfg.width,
            cfg.height,
            2 + NCOLORS * cfg.coins_per_color,
            &[],
            rng,
        );
        let positions = [cells[0], cells[1]];
        let mut coins = Vec::with_capacity(NCOLORS * cfg.coins_per_color);
        for color in 0..NCOLORS {
            for i in 0..cfg.coins_per_color {
                let (x, y) = cells[2 + color * cfg.coins_per_color + i];
                coins.push((x, y, color));
            }
        }
        let goals = match assign {
            GoalAssignment::Fixed(goals) => goals,
            // Distinct colors: draw one, then one of the other two.
            _ => {
                let g0 = rng.gen_range(0..NCOLORS);
                let shift = 1 + rng.gen_range(0..NCOLORS - 1);
                [g0, (g0 + shift) % NCOLORS]
            }
        };
        (
            Self {
                width: cfg.width,
                height: cfg.height,
                positions,
                coins,
                counts: [[0; 3]; 2],
            },
            goals,
        )
    }

    pub fn apply(&mut self, actor: PlayerId, action: Action, events: &mut Vec<Event>) {
        if let Some(delta) = action.delta() {
            if let Some(dest) = offset(self.positions[actor], delta, self.width, self.height) {
                self.positions[actor] = dest;
                if let Some(i) = self
                    .coins
                    .iter()
                    .position(|&(x, y, _)| (x, y) == dest)
                {
                    let (x, y, color) = self.coins.remove(i);
                    self.counts[actor][color] += 1;
                    events.push(Event::CoinTaken { color, x, y });
                }
            }
        }
    }

    /// Shared end-of-episode score; identical for both players.
    pub fn terminal_reward(&self, goals: &[usize; 2]) -> f64 {
        let mut total = 0.0;
        for color in 0..NCOLORS {
            let joint = (self.counts[0][color] + self.counts[1][color]) as f64;
            if color == goals[0] || color == goals[1] {
                total += joint * joint;
            } else {
                total -= joint * joint;
            }
        }
        total
    }

    pub fn remaining(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for &(_, _, color) in &self.coins {
            out[color] += 1;
        }
        out
    }

    /// Planes: coin colors 0..3, self, other, spare.
    pub fn encode(&self, perspective: PlayerId) -> Vec<f64> {
        let area = self.width * self.height;
        let mut f = vec![0.0; 6 * area];
        let at = |x: usize, y: usize| y * self.width + x;
        for &(x, y, color) in &self.coins {
            f[color * area + at(x, y)] = 1.0;
        }
        let (sx, sy) = self.positions[perspective];
        let (ox, oy) = self.positions[1 - perspective];
        f[3 * area + at(sx, sy)] = 1.0;
        f[4 * area + at(ox, oy)] = 1.0;
        f
    }
}
