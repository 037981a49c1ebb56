//! Command implementations. Every command writes only inside its
//! configured output directory; the manifest lists each artifact with
//! a content hash so a finished run can be compared byte for byte
//! against a rerun.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use som_core::agents::{BaselineAgent, BaselineKind, Player, ScriptedPolicy, SomAgent};
use som_core::envs::{EpisodeReplay, GameSpec, GoalAssignment};
use som_core::metrics::{self, csv, EpisodeRecord};
use som_core::neural::Checkpoint;
use som_core::rng::substream;
use som_core::training::{self, episode_seed, pretrain, AdamConfig};

use crate::config::{usage, AgentKind, RunConfig};
use crate::render;

/// Files written under one run root, with their digests.
struct Artifacts {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Artifacts {
    fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            hashes: BTreeMap::new(),
        }
    }

    /// Write a text artifact at `rel` under the root and record its
    /// hash.
    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.note(rel)
    }

    /// Hash a file some other writer (checkpoint saving) already put at
    /// `rel`.
    fn note(&mut self, rel: &str) -> Result<()> {
        let bytes = fs::read(self.root.join(rel))?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").unwrap();
        }
        self.hashes.insert(rel.to_string(), hex);
        Ok(())
    }

    fn manifest(&self) -> String {
        let mut out = String::from("[artifacts]\n");
        for (rel, hash) in &self.hashes {
            writeln!(out, "{rel:?} = {hash:?}").unwrap();
        }
        out
    }
}

fn build_player(
    kind: AgentKind,
    cfg: &RunConfig,
    spec: &GameSpec,
    seed: u64,
    seat: usize,
) -> Player {
    let hidden = cfg.hidden_for(spec);
    let mut rng = substream(seed, &format!("init{seat}"));
    match kind {
        AgentKind::Som => Player::Som(SomAgent::new(spec, hidden, cfg.inference(), &mut rng)),
        AgentKind::Scripted => Player::Scripted(ScriptedPolicy),
        AgentKind::Tog => Player::Baseline(BaselineAgent::new(BaselineKind::Tog, spec, hidden, &mut rng)),
        AgentKind::Nom => Player::Baseline(BaselineAgent::new(BaselineKind::Nom, spec, hidden, &mut rng)),
        AgentKind::Ipp => Player::Baseline(BaselineAgent::new(BaselineKind::Ipp, spec, hidden, &mut rng)),
        AgentKind::Spp => Player::Baseline(BaselineAgent::new(BaselineKind::Spp, spec, hidden, &mut rng)),
    }
}

#[derive(Serialize)]
struct Summary {
    episodes: usize,
    mean_reward: [f64; 2],
    wins: [usize; 2],
    inference_accuracy: f64,
}

fn summarize(records: &[EpisodeRecord], window: usize) -> Summary {
    let tail = &records[records.len().saturating_sub(window)..];
    let mut mean = [0.0; 2];
    let mut wins = [0, 0];
    for r in tail {
        for a in 0..2 {
            mean[a] += r.rewards[a];
        }
    }
    for r in records {
        for a in 0..2 {
            wins[a] += usize::from(r.won[a]);
        }
    }
    let n = tail.len().max(1) as f64;
    Summary {
        episodes: records.len(),
        mean_reward: [mean[0] / n, mean[1] / n],
        wins,
        inference_accuracy: metrics::inference_accuracy(records),
    }
}

/// The per-seed metric tables. Coin has no win condition so its win
/// table is skipped; the strategy split is coin-only.
fn write_metrics(
    art: &mut Artifacts,
    prefix: &str,
    records: &[EpisodeRecord],
    spec: &GameSpec,
    window: usize,
) -> Result<()> {
    art.write(&format!("{prefix}/episodes.csv"), &csv::episodes(records))?;
    art.write(
        &format!("{prefix}/inference_cdf.csv"),
        &csv::inference_step_cdf(&metrics::inference_step_cdf(records)),
    )?;
    match spec {
        GameSpec::Coin(_) => {
            art.write(
                &format!("{prefix}/coin_strategy.csv"),
                &csv::coin_strategy(&metrics::coin_strategy(records)),
            )?;
        }
        _ => {
            for agent in 0..2 {
                art.write(
                    &format!("{prefix}/win_fraction_agent{agent}.csv"),
                    &csv::win_fraction(&metrics::win_fraction(records, agent, window)),
                )?;
            }
        }
    }
    Ok(())
}

fn save_checkpoints(
    art: &mut Artifacts,
    dir: &str,
    cfg: &RunConfig,
    players: &[Player; 2],
) -> Result<()> {
    for (seat, player) in players.iter().enumerate() {
        let Some(params) = player.params() else {
            continue;
        };
        let kind = cfg.agents[seat];
        let rel = format!("{dir}/agent{seat}-{}.net", kind.name());
        let path = art.root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut ck = Checkpoint::from_params(params)
            .with_meta("game", cfg.game.clone())
            .with_meta("kind", kind.name())
            .with_meta("hidden", cfg.hidden_for(&cfg.spec()).to_string())
            .with_meta("n_inference_steps", cfg.n_inference_steps.to_string());
        if cfg.game == "coin" {
            ck = ck
                .with_meta("coin_width", cfg.coin_width.to_string())
                .with_meta("coin_height", cfg.coin_height.to_string())
                .with_meta("coins_per_color", cfg.coins_per_color.to_string());
        }
        ck.save(&path)?;
        art.note(&rel)?;
    }
    Ok(())
}

/// Crafting pretraining: a goal-only pair learns the non-competitive
/// crafting game, then its acting weights seed every trainable seat.
/// Wider input matrices keep the learned columns and zero the new goal
/// slots, so the warm-started nets start out computing the same policy.
fn pretrain_into(
    art: &mut Artifacts,
    dir: &str,
    cfg: &RunConfig,
    players: &mut [Player; 2],
    seed: u64,
) -> Result<()> {
    let spec = GameSpec::Recipe;
    let hidden = cfg.hidden_for(&spec);
    let mut rng = substream(seed, "pretrain-init");
    let mut pair = [
        Player::Baseline(BaselineAgent::new(BaselineKind::Nom, &spec, hidden, &mut rng)),
        Player::Baseline(BaselineAgent::new(BaselineKind::Nom, &spec, hidden, &mut rng)),
    ];
    let mut train_cfg = cfg.train_config();
    train_cfg.adam = AdamConfig::with_lr(cfg.pretrain_lr);
    let rate = pretrain::pretrain_recipe(
        &mut pair,
        &train_cfg,
        cfg.pretrain_episodes,
        cfg.win_window,
        seed ^ 0x7072_6574,
    );
    eprintln!(
        "pretraining: {} episodes, trailing craft rate {rate:.3}",
        cfg.pretrain_episodes
    );

    let src = pair[0].params().expect("goal-only agents are trainable");
    let rel = format!("{dir}/pretrain.net");
    let path = art.root.join(&rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Checkpoint::from_params(src)
        .with_meta("game", "recipe")
        .with_meta("kind", "nom")
        .with_meta("hidden", hidden.to_string())
        .save(&path)?;
    art.note(&rel)?;

    for player in players.iter_mut() {
        if let Some(dst) = player.params_mut() {
            pretrain::warm_start(src, dst);
        }
    }
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    let mut art = Artifacts::new(&cfg.out);
    art.write("config.toml", &cfg.to_toml())?;

    let spec = cfg.spec();
    let assign = cfg.assignment();
    let multi = cfg.seeds.len() > 1;
    for &seed in &cfg.seeds {
        let dir = if multi {
            format!("seed{seed}")
        } else {
            String::new()
        };
        let sub = |rel: &str| {
            if dir.is_empty() {
                rel.to_string()
            } else {
                format!("{dir}/{rel}")
            }
        };

        let mut players = [
            build_player(cfg.agents[0], cfg, &spec, seed, 0),
            build_player(cfg.agents[1], cfg, &spec, seed, 1),
        ];
        if cfg.pretrain {
            pretrain_into(&mut art, &sub("checkpoints"), cfg, &mut players, seed)?;
        }

        let mut records = Vec::with_capacity(cfg.episodes);
        let mut replays: Vec<(String, String)> = Vec::new();
        let train_cfg = cfg.train_config();
        training::train(
            &mut players,
            &spec,
            assign,
            &train_cfg,
            cfg.episodes,
            seed,
            |ep, outcome| {
                records.push(EpisodeRecord::from_outcome(
                    ep,
                    cfg.n_inference_steps,
                    outcome,
                ));
                let keep_every =
                    cfg.replay_every > 0 && (ep + 1) % cfg.replay_every == 0;
                if keep_every || ep + 1 == cfg.episodes {
                    replays.push((
                        sub(&format!("replays/ep{ep:06}.txt")),
                        outcome.replay.to_text(),
                    ));
                }
                if (ep + 1) % 1000 == 0 {
                    eprintln!("seed {seed}: episode {}/{}", ep + 1, cfg.episodes);
                }
            },
        );

        for (rel, text) in &replays {
            art.write(rel, text)?;
        }
        write_metrics(&mut art, &sub("metrics"), &records, &spec, cfg.win_window)?;
        let summary = summarize(&records, cfg.win_window);
        art.write(
            &sub("summary.toml"),
            &toml::to_string_pretty(&summary).expect("summary serializes"),
        )?;
        save_checkpoints(&mut art, &sub("checkpoints"), cfg, &players)?;
    }

    // The manifest lists every artifact but itself; it cannot contain
    // its own hash.
    fs::write(cfg.out.join("manifest.toml"), art.manifest())?;
    println!("run written to {}", cfg.out.display());
    Ok(())
}

pub struct EvalArgs {
    pub checkpoints: [PathBuf; 2],
    pub episodes: usize,
    pub seed: u64,
    pub out: PathBuf,
}

fn meta_usize(ck: &Checkpoint, key: &str, path: &Path) -> Result<usize> {
    ck.meta(key)
        .ok_or_else(|| usage(format!("checkpoint {} lacks meta key {key:?}", path.display())))?
        .parse()
        .map_err(|_| usage(format!("checkpoint {}: meta {key:?} is not a number", path.display())))
}

/// Rebuild a frozen player from a checkpoint. The architecture is
/// reconstructed from the stored meta, then the saved tensors are laid
/// over it; any shape drift is refused with both shapes printed.
fn load_player(path: &Path, spec_out: &mut Option<GameSpec>) -> Result<(Player, String)> {
    let ck = Checkpoint::load(path)
        .map_err(|e| anyhow::anyhow!("reading checkpoint {}: {e}", path.display()))?;
    let game = ck
        .meta("game")
        .ok_or_else(|| usage(format!("checkpoint {} lacks meta key \"game\"", path.display())))?
        .to_string();
    let spec = match game.as_str() {
        "coin" => GameSpec::Coin(som_core::envs::CoinConfig {
            width: meta_usize(&ck, "coin_width", path)?,
            height: meta_usize(&ck, "coin_height", path)?,
            coins_per_color: meta_usize(&ck, "coins_per_color", path)?,
        }),
        "recipe" => GameSpec::Recipe,
        "door" => GameSpec::Door,
        other => return Err(usage(format!(
            "checkpoint {}: unknown game {other:?}",
            path.display()
        ))),
    };
    match spec_out {
        Some(existing) if *existing != spec => {
            return Err(usage("checkpoints were trained on different games"))
        }
        Some(_) => {}
        None => *spec_out = Some(spec.clone()),
    }

    let hidden = meta_usize(&ck, "hidden", path)?;
    let kind = ck
        .meta("kind")
        .ok_or_else(|| usage(format!("checkpoint {} lacks meta key \"kind\"", path.display())))?
        .to_string();
    let mut rng = substream(0, "eval-arch");
    let mut player = match kind.as_str() {
        "som" => {
            let infer = som_core::agents::InferenceConfig {
                n_steps: meta_usize(&ck, "n_inference_steps", path)?,
                ..Default::default()
            };
            Player::Som(SomAgent::new(&spec, hidden, infer, &mut rng))
        }
        "tog" => Player::Baseline(BaselineAgent::new(BaselineKind::Tog, &spec, hidden, &mut rng)),
        "nom" => Player::Baseline(BaselineAgent::new(BaselineKind::Nom, &spec, hidden, &mut rng)),
        "ipp" => Player::Baseline(BaselineAgent::new(BaselineKind::Ipp, &spec, hidden, &mut rng)),
        "spp" => Player::Baseline(BaselineAgent::new(BaselineKind::Spp, &spec, hidden, &mut rng)),
        other => {
            return Err(usage(format!(
                "checkpoint {}: unknown agent kind {other:?}",
                path.display()
            )))
        }
    };
    let params = player.params_mut().expect("loaded kinds are trainable");
    ck.apply_to(params)
        .map_err(|e| anyhow::anyhow!("checkpoint {}: {e}", path.display()))?;
    Ok((player, kind))
}

/// Frozen rollouts: no learner updates, checkpoints opened read-only.
pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut spec_slot = None;
    let (p0, k0) = load_player(&args.checkpoints[0], &mut spec_slot)?;
    let (p1, k1) = load_player(&args.checkpoints[1], &mut spec_slot)?;
    let spec = spec_slot.expect("loading set the game");
    eprintln!("evaluating {k0} vs {k1} on {}", spec.name());
    let mut players = [p0, p1];

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let mut art = Artifacts::new(&args.out);

    let mut records = Vec::with_capacity(args.episodes);
    let n_steps = players
        .iter()
        .find_map(|p| match p {
            Player::Som(a) => Some(a.infer.n_steps),
            _ => None,
        })
        .unwrap_or(0);
    for ep in 0..args.episodes {
        let env_seed = episode_seed(args.seed, ep as u64);
        let mut rng = substream(env_seed, "play");
        let outcome = training::run_episode(
            &mut players,
            &spec,
            GoalAssignment::Standard,
            env_seed,
            &mut rng,
        );
        for p in players.iter_mut() {
            p.take_tape();
        }
        records.push(EpisodeRecord::from_outcome(ep, n_steps, &outcome));
    }

    write_metrics(&mut art, "metrics", &records, &spec, 100)?;
    art.write(
        "summary.toml",
        &toml::to_string_pretty(&summarize(&records, records.len().max(1)))
            .expect("summary serializes"),
    )?;
    let manifest = art.manifest();
    fs::write(args.out.join("manifest.toml"), &manifest)?;
    println!("evaluation written to {}", args.out.display());
    Ok(())
}

/// One training plus evaluation per requested inference-step count,
/// aggregated into a single table. Zero steps means inference is
/// disabled for that run.
pub fn cmd_sweep(cfg: &RunConfig, steps: &[usize]) -> Result<()> {
    let mut unique: Vec<usize> = Vec::new();
    for &n in steps {
        if unique.contains(&n) {
            eprintln!("sweep: ignoring duplicate step count {n}");
        } else {
            unique.push(n);
        }
    }
    if unique.is_empty() {
        return Err(usage("field `steps` must list at least one step count"));
    }
    unique.sort_unstable();

    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    let mut art = Artifacts::new(&cfg.out);
    art.write("config.toml", &cfg.to_toml())?;

    let spec = cfg.spec();
    let assign = cfg.assignment();
    let mut eval_records: Vec<EpisodeRecord> = Vec::new();
    for &n in &unique {
        let mut ncfg = cfg.clone();
        ncfg.n_inference_steps = n;
        let train_cfg = ncfg.train_config();
        for &seed in &cfg.seeds {
            let mut players = [
                build_player(cfg.agents[0], &ncfg, &spec, seed, 0),
                build_player(cfg.agents[1], &ncfg, &spec, seed, 1),
            ];
            training::train(
                &mut players,
                &spec,
                assign,
                &train_cfg,
                cfg.episodes,
                seed,
                |_, _| {},
            );
            // Disjoint seed sequence for held-out evaluation episodes.
            let eval_base = seed ^ 0xE7A1_5EED;
            for ep in 0..cfg.eval_episodes {
                let env_seed = episode_seed(eval_base, ep as u64);
                let mut rng = substream(env_seed, "play");
                let outcome =
                    training::run_episode(&mut players, &spec, assign, env_seed, &mut rng);
                for p in players.iter_mut() {
                    p.take_tape();
                }
                eval_records.push(EpisodeRecord::from_outcome(eval_records.len(), n, &outcome));
            }
        }
        eprintln!("sweep: finished n_inference_steps={n}");
    }

    let rows = metrics::ninf_sweep(&eval_records, 0);
    art.write("metrics/ninf.csv", &csv::ninf_sweep(&rows))?;
    art.write("metrics/episodes.csv", &csv::episodes(&eval_records))?;
    let manifest = art.manifest();
    fs::write(cfg.out.join("manifest.toml"), &manifest)?;
    println!("sweep written to {}", cfg.out.display());
    Ok(())
}

/// Print a transcript of a saved episode and re-simulate it; any
/// divergence between the log and the rules is an error.
pub fn cmd_replay(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading replay {}", path.display()))?;
    let replay = EpisodeReplay::parse(&text)
        .map_err(|e| anyhow::anyhow!("replay {}: {e}", path.display()))?;
    replay
        .verify()
        .map_err(|e| anyhow::anyhow!("replay {}: {e}", path.display()))?;
    print!("{}", render::transcript(&replay)?);
    Ok(())
}
