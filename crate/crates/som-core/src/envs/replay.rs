//! Text replays of finished episodes.
//!
//! A replay records the episode seed plus everything the players did;
//! the board itself is never serialized because `GameState::reset` is
//! deterministic in the seed. `verify` re-simulates from the seed and
//! checks that every recorded event and the final reward totals fall
//! out identically, which catches both corrupted files and accidental
//! changes to game rules.
//!
//! The format is line-oriented:
//!
//! ```text
//! som-replay v1
//! game coin 8 8 4
//! seed 12345
//! assign standard
//! goals 1 2
//! first 0
//! step 0 right coin 1 3 4
//! step 1 pass
//! rewards 9 9
//! end
//! ```
//!
//! Rewards are printed with Rust's shortest round-trip float notation,
//! so parsing returns bit-identical values.

use super::{Action, CoinConfig, Event, GameSpec, GameState, GoalAssignment, PlayerId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("replay does not match re-simulation at step {step}: {what}")]
    StepMismatch { step: usize, what: String },
    #[error("replay does not match re-simulation: {what}")]
    Mismatch { what: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayStep {
    pub actor: PlayerId,
    pub action: Action,
    pub events: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeReplay {
    pub spec: GameSpec,
    pub seed: u64,
    pub assign: GoalAssignment,
    pub goals: [usize; 2],
    pub first_actor: PlayerId,
    pub steps: Vec<ReplayStep>,
    /// Total reward collected by each player over the episode.
    pub rewards: [f64; 2],
}

impl EpisodeReplay {
    /// Start a recording for a freshly reset state.
    pub fn begin(state: &GameState, seed: u64, assign: GoalAssignment) -> Self {
        Self {
            spec: state.spec().clone(),
            seed,
            assign,
            goals: state.goals(),
            first_actor: state.first_actor(),
            steps: Vec::new(),
            rewards: [0.0; 2],
        }
    }

    pub fn push(&mut self, actor: PlayerId, action: Action, events: &[Event], rewards: [f64; 2]) {
        self.steps.push(ReplayStep {
            actor,
            action,
            events: events.to_vec(),
        });
        self.rewards[0] += rewards[0];
        self.rewards[1] += rewards[1];
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("som-replay v1\n");
        match &self.spec {
            GameSpec::Coin(c) => {
                out.push_str(&format!(
                    "game coin {} {} {}\n",
                    c.width, c.height, c.coins_per_color
                ));
            }
            GameSpec::Recipe => out.push_str("game recipe\n"),
            GameSpec::Door => out.push_str("game door\n"),
        }
        out.push_str(&format!("seed {}\n", self.seed));
        match self.assign {
            GoalAssignment::Standard => out.push_str("assign standard\n"),
            GoalAssignment::NonOverlapping => out.push_str("assign nonoverlap\n"),
            GoalAssignment::Fixed([a, b]) => out.push_str(&format!("assign fixed {a} {b}\n")),
        }
        out.push_str(&format!("goals {} {}\n", self.goals[0], self.goals[1]));
        out.push_str(&format!("first {}\n", self.first_actor));
        for step in &self.steps {
            out.push_str(&format!("step {} {}", step.actor, step.action.name()));
            for ev in &step.events {
                match *ev {
                    Event::CoinTaken { color, x, y } => {
                        out.push_str(&format!(" coin {color} {x} {y}"));
                    }
                    Event::ItemTaken { item, x, y } => {
                        out.push_str(&format!(" item {item} {x} {y}"));
                    }
                    Event::GoalReached => out.push_str(" goal"),
                }
            }
            out.push('\n');
        }
        out.push_str(&format!("rewards {} {}\n", self.rewards[0], self.rewards[1]));
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self, ReplayError> {
        let mut lines = text.lines().enumerate();

        let (line, toks) = next_expect(&mut lines, "som-replay")?;
        if toks.get(1).map(String::as_str) != Some("v1") {
            return Err(ReplayError::Parse {
                line,
                what: "unsupported replay version".into(),
            });
        }

        let (line, toks) = next_expect(&mut lines, "game")?;
        let spec = match toks.get(1).map(String::as_str) {
            Some("coin") => {
                let dims = parse_fields::<usize>(&toks[2..], 3, line, "coin dimensions")?;
                GameSpec::Coin(CoinConfig {
                    width: dims[0],
                    height: dims[1],
                    coins_per_color: dims[2],
                })
            }
            Some("recipe") => GameSpec::Recipe,
            Some("door") => GameSpec::Door,
            other => {
                return Err(ReplayError::Parse {
                    line,
                    what: format!("unknown game {other:?}"),
                })
            }
        };

        let (line, toks) = next_expect(&mut lines, "seed")?;
        let seed = parse_fields::<u64>(&toks[1..], 1, line, "seed")?[0];

        let (line, toks) = next_expect(&mut lines, "assign")?;
        let assign = match toks.get(1).map(String::as_str) {
            Some("standard") => GoalAssignment::Standard,
            Some("nonoverlap") => GoalAssignment::NonOverlapping,
            Some("fixed") => {
                let g = parse_fields::<usize>(&toks[2..], 2, line, "fixed goals")?;
                GoalAssignment::Fixed([g[0], g[1]])
            }
            other => {
                return Err(ReplayError::Parse {
                    line,
                    what: format!("unknown assignment {other:?}"),
                })
            }
        };

        let (line, toks) = next_expect(&mut lines, "goals")?;
        let g = parse_fields::<usize>(&toks[1..], 2, line, "goals")?;
        let goals = [g[0], g[1]];

        let (line, toks) = next_expect(&mut lines, "first")?;
        let first_actor = parse_fields::<PlayerId>(&toks[1..], 1, line, "first actor")?[0];
        if first_actor > 1 {
            return Err(ReplayError::Parse {
                line,
                what: format!("first actor must be 0 or 1, got {first_actor}"),
            });
        }

        let mut steps = Vec::new();
        let rewards;
        loop {
            let (i, raw) = lines.next().ok_or(ReplayError::Parse {
                line: 0,
                what: "file ended before 'rewards' line".into(),
            })?;
            let line = i + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            match toks.first().copied() {
                Some("step") => {
                    if toks.len() < 3 {
                        return Err(ReplayError::Parse {
                            line,
                            what: "step needs an actor and an action".into(),
                        });
                    }
                    let actor: PlayerId = toks[1].parse().map_err(|_| ReplayError::Parse {
                        line,
                        what: format!("bad actor '{}'", toks[1]),
                    })?;
                    if actor > 1 {
                        return Err(ReplayError::Parse {
                            line,
                            what: format!("actor must be 0 or 1, got {actor}"),
                        });
                    }
                    let action = Action::from_name(toks[2]).ok_or(ReplayError::Parse {
                        line,
                        what: format!("unknown action '{}'", toks[2]),
                    })?;
                    let events = parse_events(&toks[3..], line)?;
                    steps.push(ReplayStep {
                        actor,
                        action,
                        events,
                    });
                }
                Some("rewards") => {
                    let r = parse_fields::<f64>(&toks[1..], 2, line, "rewards")?;
                    rewards = [r[0], r[1]];
                    break;
                }
                other => {
                    return Err(ReplayError::Parse {
                        line,
                        what: format!("expected 'step' or 'rewards', got {other:?}"),
                    })
                }
            }
        }

        next_expect(&mut lines, "end")?;
        if let Some((i, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(ReplayError::Parse {
                line: i + 1,
                what: format!("unexpected content after end: '{extra}'"),
            });
        }

        Ok(Self {
            spec,
            seed,
            assign,
            goals,
            first_actor,
            steps,
            rewards,
        })
    }

    /// Re-simulate the episode from its seed and demand an exact match:
    /// same goals, same events at every step, same reward totals.
    pub fn verify(&self) -> Result<(), ReplayError> {
        let mut state = GameState::reset(&self.spec, self.seed, self.assign);
        if state.goals() != self.goals {
            return Err(ReplayError::Mismatch {
                what: format!(
                    "goals: recorded {:?}, re-simulated {:?}",
                    self.goals,
                    state.goals()
                ),
            });
        }
        if state.first_actor() != self.first_actor {
            return Err(ReplayError::Mismatch {
                what: format!(
                    "first actor: recorded {}, re-simulated {}",
                    self.first_actor,
                    state.first_actor()
                ),
            });
        }
        let mut totals = [0.0; 2];
        for (i, step) in self.steps.iter().enumerate() {
            let out = state
                .step(step.actor, step.action)
                .map_err(|e| ReplayError::StepMismatch {
                    step: i,
                    what: e.to_string(),
                })?;
            if out.events != step.events {
                return Err(ReplayError::StepMismatch {
                    step: i,
                    what: format!("events: recorded {:?}, got {:?}", step.events, out.events),
                });
            }
            totals[0] += out.rewards[0];
            totals[1] += out.rewards[1];
            if out.done && i + 1 != self.steps.len() {
                return Err(ReplayError::StepMismatch {
                    step: i,
                    what: "episode ended before the recorded steps ran out".into(),
                });
            }
        }
        if !state.is_over() {
            return Err(ReplayError::Mismatch {
                what: "recorded steps do not finish the episode".into(),
            });
        }
        if totals != self.rewards {
            return Err(ReplayError::Mismatch {
                what: format!(
                    "rewards: recorded {:?}, re-simulated {:?}",
                    self.rewards, totals
                ),
            });
        }
        Ok(())
    }
}

fn next_expect<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    expect: &str,
) -> Result<(usize, Vec<String>), ReplayError> {
    match lines.next() {
        Some((i, line)) => {
            let toks: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
            if toks.first().map(String::as_str) != Some(expect) {
                Err(ReplayError::Parse {
                    line: i + 1,
                    what: format!("expected '{expect} ...', got '{line}'"),
                })
            } else {
                Ok((i + 1, toks))
            }
        }
        None => Err(ReplayError::Parse {
            line: 0,
            what: format!("file ended before '{expect}' line"),
        }),
    }
}

fn parse_fields<T: std::str::FromStr>(
    toks: &[impl AsRef<str>],
    want: usize,
    line: usize,
    what: &str,
) -> Result<Vec<T>, ReplayError> {
    if toks.len() != want {
        return Err(ReplayError::Parse {
            line,
            what: format!("{what}: expected {want} fields, got {}", toks.len()),
        });
    }
    toks.iter()
        .map(|t| {
            let t = t.as_ref();
            t.parse().map_err(|_| ReplayError::Parse {
                line,
                what: format!("{what}: bad value '{t}'"),
            })
        })
        .collect()
}

fn parse_events(toks: &[&str], line: usize) -> Result<Vec<Event>, ReplayError> {
    let mut events = Vec::new();
    let mut i = 0;
    let take3 = |toks: &[&str], i: usize| -> Result<(usize, usize, usize), ReplayError> {
        if i + 3 > toks.len() {
            return Err(ReplayError::Parse {
                line,
                what: "event is missing fields".into(),
            });
        }
        let mut vals = [0usize; 3];
        for (k, t) in toks[i..i + 3].iter().enumerate() {
            vals[k] = t.parse().map_err(|_| ReplayError::Parse {
                line,
                what: format!("bad event field '{t}'"),
            })?;
        }
        Ok((vals[0], vals[1], vals[2]))
    };
    while i < toks.len() {
        match toks[i] {
            "coin" => {
                let (color, x, y) = take3(toks, i + 1)?;
                events.push(Event::CoinTaken { color, x, y });
                i += 4;
            }
            "item" => {
                let (item, x, y) = take3(toks, i + 1)?;
                events.push(Event::ItemTaken { item, x, y });
                i += 4;
            }
            "goal" => {
                events.push(Event::GoalReached);
                i += 1;
            }
            other => {
                return Err(ReplayError::Parse {
                    line,
                    what: format!("unknown event '{other}'"),
                })
            }
        }
    }
    Ok(events)
}
