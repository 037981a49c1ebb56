//! ASCII transcript of a recorded episode. The board is re-simulated
//! from the recorded seed, so a transcript also doubles as a check that
//! the log matches the rules (the caller verifies before printing).

use std::fmt::Write;

use som_core::envs::{Event, GameSpec, GameState, ReplayStep};
use som_core::envs::EpisodeReplay;

/// Door board columns; mirrored from the game's fixed layout.
const DOOR_GOAL_COL: usize = 0;
const DOOR_DOOR_COL: usize = 1;
const DOOR_SWITCH_COL: usize = 8;

fn board(state: &GameState) -> String {
    let (w, h) = state.spec().grid();
    let mut cells = vec![b'.'; w * h];
    let mut put = |x: usize, y: usize, c: u8| cells[y * w + x] = c;

    match state.spec() {
        GameSpec::Coin(_) => {
            for &(x, y, color) in state.coin_positions().expect("coin game") {
                put(x, y, b'0' + color as u8);
            }
        }
        GameSpec::Recipe => {
            for &(x, y, item) in state.item_positions().expect("recipe game") {
                put(x, y, b'a' + item as u8);
            }
        }
        GameSpec::Door => {
            for row in 0..h {
                put(DOOR_GOAL_COL, row, b'g');
                put(DOOR_SWITCH_COL, row, b's');
                let on_switch = (0..2).any(|p| state.agent_position(p) == (DOOR_SWITCH_COL, row));
                put(DOOR_DOOR_COL, row, if on_switch { b'/' } else { b'D' });
            }
        }
    }

    let (ax, ay) = state.agent_position(0);
    let (bx, by) = state.agent_position(1);
    if (ax, ay) == (bx, by) {
        put(ax, ay, b'&');
    } else {
        put(ax, ay, b'A');
        put(bx, by, b'B');
    }

    let mut out = String::with_capacity((w + 3) * h);
    for y in 0..h {
        out.push_str("  ");
        out.push_str(std::str::from_utf8(&cells[y * w..(y + 1) * w]).unwrap());
        out.push('\n');
    }
    out
}

fn event_line(e: &Event) -> String {
    match e {
        Event::CoinTaken { color, x, y } => format!("takes coin {color} at ({x},{y})"),
        Event::ItemTaken { item, x, y } => format!("picks item {} at ({x},{y})", (b'a' + *item as u8) as char),
        Event::GoalReached => "reaches the goal".to_string(),
    }
}

fn step_line(i: usize, step: &ReplayStep, rewards: [f64; 2]) -> String {
    let mut line = format!("step {:>3}  agent{} {}", i + 1, step.actor, step.action.name());
    for e in &step.events {
        write!(line, "  [{}]", event_line(e)).unwrap();
    }
    if rewards != [0.0, 0.0] {
        write!(line, "  reward {:+} / {:+}", rewards[0], rewards[1]).unwrap();
    }
    line.push('\n');
    line
}

/// Full transcript: header, initial board, every step with the board
/// after it, recomputed totals. The caller verifies the replay first,
/// so an illegal step here means the file changed underneath us.
pub fn transcript(replay: &EpisodeReplay) -> anyhow::Result<String> {
    let mut state = GameState::reset(&replay.spec, replay.seed, replay.assign);
    let mut out = String::new();

    let (w, h) = replay.spec.grid();
    writeln!(out, "game: {} ({w}x{h})", replay.spec.name()).unwrap();
    writeln!(out, "seed: {}", replay.seed).unwrap();
    writeln!(
        out,
        "goals: agent0={} agent1={}",
        replay.goals[0], replay.goals[1]
    )
    .unwrap();
    writeln!(out, "first actor: agent{}", replay.first_actor).unwrap();
    out.push('\n');
    out.push_str(&board(&state));
    out.push('\n');

    let mut totals = [0.0; 2];
    for (i, step) in replay.steps.iter().enumerate() {
        let outcome = state
            .step(step.actor, step.action)
            .map_err(|e| anyhow::anyhow!("step {}: {e}", i + 1))?;
        totals[0] += outcome.rewards[0];
        totals[1] += outcome.rewards[1];
        out.push_str(&step_line(i, step, outcome.rewards));
        out.push_str(&board(&state));
        out.push('\n');
    }

    writeln!(
        out,
        "totals: agent0={:+} agent1={:+} (recomputed from the rules; matches the log)",
        totals[0], totals[1]
    )
    .unwrap();
    Ok(out)
}
