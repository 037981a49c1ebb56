//! `som`: train, evaluate, sweep and replay goal-inference agents in
//! two-player grid games.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage or
//! configuration problem (the message names the offending field).

mod config;
mod render;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, Overrides, RunConfig, UsageError};

#[derive(Parser)]
#[command(
    name = "som",
    about = "Agents that model an opponent's hidden goal with their own policy network",
    long_about = "Trains pairs of recurrent policy-gradient agents in two-player grid \
games (coin, recipe, door) where each player's goal is hidden from the other. \
The self other-modeling agent reuses its own network, with the goal slots \
swapped, to infer what the opponent is after.\n\n\
Settings resolve in precedence order: command line flags, then the --config \
file, then built-in defaults. Output goes to --out, or to \
$SOM_OUT_ROOT/<derived-name> when the flag is absent."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct TrainFlags {
    /// TOML config file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Game to play: coin, recipe or door.
    #[arg(long)]
    game: Option<String>,
    /// Two comma-separated agent kinds, e.g. "som,scripted".
    #[arg(long)]
    agents: Option<String>,
    /// Run seed; repeat the flag for a multi-seed run.
    #[arg(long)]
    seed: Vec<u64>,
    /// Training episodes per seed.
    #[arg(long)]
    episodes: Option<usize>,
    /// Emulated asynchronous learners sharing the weights.
    #[arg(long)]
    workers: Option<usize>,
    /// Belief-descent steps per observed opponent action.
    #[arg(long)]
    n_inference_steps: Option<usize>,
    /// Pretrain on non-overlapping recipes and warm-start from it.
    #[arg(long)]
    pretrain: bool,
    /// Output directory (default: $SOM_OUT_ROOT/<derived-name>).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainFlags {
    fn overrides(self) -> Overrides {
        Overrides {
            game: self.game,
            agents: self.agents,
            seeds: self.seed,
            episodes: self.episodes,
            workers: self.workers,
            n_inference_steps: self.n_inference_steps,
            pretrain: self.pretrain,
            out: self.out,
        }
    }

    fn resolve(self) -> anyhow::Result<RunConfig> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        RunConfig::resolve(file, self.overrides())
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a pair of agents and write checkpoints, metrics and
    /// replays.
    Train(TrainFlags),
    /// Roll out saved checkpoints with frozen weights.
    Eval {
        /// Exactly two checkpoint files, seat 0 then seat 1.
        #[arg(long = "checkpoint", num_args = 1, required = true)]
        checkpoints: Vec<PathBuf>,
        /// Evaluation episodes.
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Seed for the evaluation episode sequence.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for the metric tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate once per inference-step count and tabulate
    /// the comparison. Zero disables inference for that run.
    Sweep {
        #[command(flatten)]
        flags: TrainFlags,
        /// Comma-separated inference-step counts, e.g. "0,1,5,10".
        #[arg(long)]
        steps: String,
    },
    /// Print and re-check the transcript of a saved episode replay.
    Replay {
        /// Replay file written by a training run.
        file: PathBuf,
    },
}

fn dispatch(cmd: Cmd) -> anyhow::Result<()> {
    match cmd {
        Cmd::Train(flags) => run::cmd_train(&flags.resolve()?),
        Cmd::Eval {
            checkpoints,
            episodes,
            seed,
            out,
        } => {
            if checkpoints.len() != 2 {
                return Err(config::usage(format!(
                    "flag `--checkpoint` wants exactly two files, got {}",
                    checkpoints.len()
                )));
            }
            let out = match out.or_else(|| {
                std::env::var_os("SOM_OUT_ROOT").map(|root| PathBuf::from(root).join("eval"))
            }) {
                Some(p) => p,
                None => {
                    return Err(config::usage(
                        "flag `--out` not set and SOM_OUT_ROOT is not in the environment",
                    ))
                }
            };
            run::cmd_eval(&run::EvalArgs {
                checkpoints: [checkpoints[0].clone(), checkpoints[1].clone()],
                episodes,
                seed,
                out,
            })
        }
        Cmd::Sweep { flags, steps } => {
            let parsed: Result<Vec<usize>, _> =
                steps.split(',').map(|s| s.trim().parse::<usize>()).collect();
            let parsed = parsed.map_err(|_| {
                config::usage(format!(
                    "flag `--steps`: expected comma-separated non-negative integers, got {steps:?}"
                ))
            })?;
            run::cmd_sweep(&flags.resolve()?, &parsed)
        }
        Cmd::Replay { file } => run::cmd_replay(&file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("som: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("som: {e:#}");
            ExitCode::from(1)
        }
    }
}
