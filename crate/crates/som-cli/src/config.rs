//! Run configuration: a TOML file, command line flags on top, built-in
//! defaults underneath. Flags take precedence over the file, the file
//! over the defaults. Every knob of the training loop is reachable from
//! the file; only the common ones have flags.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use som_core::agents::InferenceConfig;
use som_core::envs::{CoinConfig, GameSpec, GoalAssignment};
use som_core::training::{AdamConfig, TrainConfig};

/// A configuration or usage problem the caller can fix. The message
/// names the offending field. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Which policy sits in a seat.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Som,
    Tog,
    Nom,
    Ipp,
    Spp,
    Scripted,
}

impl AgentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "som" => AgentKind::Som,
            "tog" => AgentKind::Tog,
            "nom" => AgentKind::Nom,
            "ipp" => AgentKind::Ipp,
            "spp" => AgentKind::Spp,
            "scripted" => AgentKind::Scripted,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Som => "som",
            AgentKind::Tog => "tog",
            AgentKind::Nom => "nom",
            AgentKind::Ipp => "ipp",
            AgentKind::Spp => "spp",
            AgentKind::Scripted => "scripted",
        }
    }

}

/// The raw file shape: everything optional so missing fields fall
/// through to flags and defaults. Unknown keys are rejected so typos
/// surface instead of silently using a default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub game: Option<String>,
    pub agents: Option<Vec<String>>,
    pub goal_assignment: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub episodes: Option<usize>,
    pub eval_episodes: Option<usize>,
    pub workers: Option<usize>,
    pub hidden: Option<usize>,
    pub n_inference_steps: Option<usize>,
    pub inference_lr: Option<f64>,
    pub gumbel_temperature: Option<f64>,
    pub gamma: Option<f64>,
    pub entropy_coef: Option<f64>,
    pub value_coef: Option<f64>,
    pub aux_coef: Option<f64>,
    pub learning_rate: Option<f64>,
    pub win_window: Option<usize>,
    pub replay_every: Option<usize>,
    pub pretrain: Option<bool>,
    pub pretrain_episodes: Option<usize>,
    pub pretrain_lr: Option<f64>,
    pub coin_width: Option<usize>,
    pub coin_height: Option<usize>,
    pub coins_per_color: Option<usize>,
    pub out: Option<String>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag values collected by the CLI layer; `None` means the flag was
/// not given.
#[derive(Debug, Default)]
pub struct Overrides {
    pub game: Option<String>,
    pub agents: Option<String>,
    pub seeds: Vec<u64>,
    pub episodes: Option<usize>,
    pub workers: Option<usize>,
    pub n_inference_steps: Option<usize>,
    pub pretrain: bool,
    pub out: Option<PathBuf>,
}

/// Fully resolved run configuration. Serialized verbatim into the run
/// directory so a run can be reproduced from its artifacts alone.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub game: String,
    pub agents: [AgentKind; 2],
    pub goal_assignment: String,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub eval_episodes: usize,
    pub workers: usize,
    pub hidden: usize,
    pub n_inference_steps: usize,
    pub inference_lr: f64,
    pub gumbel_temperature: f64,
    pub gamma: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub aux_coef: f64,
    pub learning_rate: f64,
    pub win_window: usize,
    /// Save a replay every this many episodes; 0 keeps only the last.
    pub replay_every: usize,
    pub pretrain: bool,
    pub pretrain_episodes: usize,
    pub pretrain_lr: f64,
    pub coin_width: usize,
    pub coin_height: usize,
    pub coins_per_color: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    /// Merge flags over file over defaults and validate the result.
    pub fn resolve(file: FileConfig, flags: Overrides) -> anyhow::Result<Self> {
        let game = flags
            .game
            .or(file.game)
            .ok_or_else(|| usage("missing required field `game` (coin, recipe or door)"))?;

        let agent_names: Vec<String> = match flags.agents {
            Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
            None => file.agents.unwrap_or_else(|| vec!["som".into(), "som".into()]),
        };
        if agent_names.len() != 2 {
            return Err(usage(format!(
                "field `agents` wants exactly two entries, got {}",
                agent_names.len()
            )));
        }
        let mut agents = [AgentKind::Som; 2];
        for (i, name) in agent_names.iter().enumerate() {
            agents[i] = AgentKind::parse(name).ok_or_else(|| {
                usage(format!(
                    "field `agents`: unknown kind {name:?} (som, tog, nom, ipp, spp, scripted)"
                ))
            })?;
        }

        let seeds = if flags.seeds.is_empty() {
            file.seeds.unwrap_or_else(|| vec![0])
        } else {
            flags.seeds
        };
        if seeds.is_empty() {
            return Err(usage("field `seeds` must list at least one seed"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(usage("field `seeds` contains a duplicate"));
        }

        let goal_assignment = file.goal_assignment.unwrap_or_else(|| "standard".into());
        if goal_assignment != "standard" && goal_assignment != "nonoverlapping" {
            return Err(usage(format!(
                "field `goal_assignment`: expected \"standard\" or \"nonoverlapping\", got {goal_assignment:?}"
            )));
        }

        let cfg = RunConfig {
            game,
            agents,
            goal_assignment,
            seeds,
            episodes: flags.episodes.or(file.episodes).unwrap_or(1000),
            eval_episodes: file.eval_episodes.unwrap_or(200),
            workers: flags.workers.or(file.workers).unwrap_or(1),
            hidden: file.hidden.unwrap_or(0),
            n_inference_steps: flags
                .n_inference_steps
                .or(file.n_inference_steps)
                .unwrap_or(10),
            inference_lr: file.inference_lr.unwrap_or(0.1),
            gumbel_temperature: file.gumbel_temperature.unwrap_or(1.0),
            gamma: file.gamma.unwrap_or(0.99),
            entropy_coef: file.entropy_coef.unwrap_or(0.01),
            value_coef: file.value_coef.unwrap_or(0.5),
            aux_coef: file.aux_coef.unwrap_or(1.0),
            learning_rate: file.learning_rate.unwrap_or(1e-4),
            win_window: file.win_window.unwrap_or(100),
            replay_every: file.replay_every.unwrap_or(0),
            pretrain: flags.pretrain || file.pretrain.unwrap_or(false),
            pretrain_episodes: file.pretrain_episodes.unwrap_or(2000),
            pretrain_lr: file.pretrain_lr.unwrap_or(1e-4),
            coin_width: file.coin_width.unwrap_or(8),
            coin_height: file.coin_height.unwrap_or(8),
            coins_per_color: file.coins_per_color.unwrap_or(4),
            out: PathBuf::new(),
        };
        cfg.validate()?;

        let out = match flags.out.or(file.out.map(PathBuf::from)) {
            Some(p) => p,
            None => match std::env::var_os("SOM_OUT_ROOT") {
                Some(root) => PathBuf::from(root).join(cfg.derived_name()),
                None => {
                    return Err(usage(
                        "field `out` not set and SOM_OUT_ROOT is not in the environment",
                    ))
                }
            },
        };
        Ok(RunConfig { out, ..cfg })
    }

    fn validate(&self) -> anyhow::Result<()> {
        if !matches!(self.game.as_str(), "coin" | "recipe" | "door") {
            return Err(usage(format!(
                "field `game`: expected \"coin\", \"recipe\" or \"door\", got {:?}",
                self.game
            )));
        }
        if self.workers == 0 {
            return Err(usage("field `workers` must be at least 1"));
        }
        if self.gumbel_temperature <= 0.0 {
            return Err(usage("field `gumbel_temperature` must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(usage("field `gamma` must lie in [0, 1]"));
        }
        if self.learning_rate <= 0.0 {
            return Err(usage("field `learning_rate` must be positive"));
        }
        if self.pretrain && self.game != "recipe" {
            return Err(usage(
                "field `pretrain` only applies to the recipe game",
            ));
        }
        if self.game == "coin" {
            let cells = self.coin_width * self.coin_height;
            // Two agents plus every coin need distinct cells.
            if cells < 2 + 3 * self.coins_per_color {
                return Err(usage(
                    "field `coins_per_color`: board too small for the coins and both agents",
                ));
            }
            if self.coin_width == 0 || self.coin_height == 0 {
                return Err(usage("field `coin_width`/`coin_height` must be positive"));
            }
        }
        Ok(())
    }

    fn derived_name(&self) -> String {
        format!(
            "{}-{}-{}-s{}",
            self.game,
            self.agents[0].name(),
            self.agents[1].name(),
            self.seeds[0]
        )
    }

    pub fn spec(&self) -> GameSpec {
        match self.game.as_str() {
            "coin" => GameSpec::Coin(CoinConfig {
                width: self.coin_width,
                height: self.coin_height,
                coins_per_color: self.coins_per_color,
            }),
            "recipe" => GameSpec::Recipe,
            "door" => GameSpec::Door,
            other => unreachable!("validated game name {other:?}"),
        }
    }

    pub fn assignment(&self) -> GoalAssignment {
        match self.goal_assignment.as_str() {
            "nonoverlapping" => GoalAssignment::NonOverlapping,
            _ => GoalAssignment::Standard,
        }
    }

    /// LSTM width: explicit `hidden` wins, otherwise the game default.
    pub fn hidden_for(&self, spec: &GameSpec) -> usize {
        if self.hidden == 0 {
            spec.default_hidden()
        } else {
            self.hidden
        }
    }

    pub fn inference(&self) -> InferenceConfig {
        InferenceConfig {
            n_steps: self.n_inference_steps,
            lr: self.inference_lr,
            temperature: self.gumbel_temperature,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            gamma: self.gamma,
            entropy_coef: self.entropy_coef,
            value_coef: self.value_coef,
            aux_coef: self.aux_coef,
            adam: AdamConfig::with_lr(self.learning_rate),
            workers: self.workers,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
