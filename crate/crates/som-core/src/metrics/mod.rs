//! Analysis quantities computed from episode records, and the CSV
//! tables the command-line tools emit.
//!
//! Everything here is a pure function of an immutable record slice.
//! Only the rolling win fraction depends on record order; the rest are
//! order-independent aggregates.

use crate::envs::PlayerId;
use crate::training::EpisodeOutcome;

/// One finished episode as the metrics see it.
#[derive(Clone, Debug)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    /// Inference steps per observed action the inferring agents ran
    /// with; lets sweep records share one file.
    pub n_inference_steps: usize,
    pub rewards: [f64; 2],
    pub won: [bool; 2],
    pub goals: [usize; 2],
    /// Coins collected per agent per color, coin game only.
    pub coin_counts: Option<[[usize; 3]; 2]>,
    /// Belief argmax after each observed opponent action, per agent;
    /// empty for agents that do not infer.
    pub traces: [Vec<usize>; 2],
}

impl EpisodeRecord {
    pub fn from_outcome(episode: usize, n_inference_steps: usize, o: &EpisodeOutcome) -> Self {
        Self {
            episode,
            seed: o.seed,
            n_inference_steps,
            rewards: o.rewards,
            won: o.won,
            goals: o.goals,
            coin_counts: o.coin_counts,
            traces: o.estimates.clone(),
        }
    }
}

/// Mean coins per agent per episode, split by whose color they were.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinStrategy {
    pub own_color: f64,
    pub other_color: f64,
    pub neither_color: f64,
    /// Agent-episode samples behind the means (two per coin episode).
    pub samples: usize,
}

/// Fig-3-style breakdown, averaged over both agents and all coin
/// episodes in the set. When the two goals coincide, that color counts
/// as the agent's own and the other-color tally is zero.
pub fn coin_strategy(records: &[EpisodeRecord]) -> CoinStrategy {
    let mut sums = [0.0f64; 3];
    let mut samples = 0usize;
    for r in records {
        let Some(counts) = r.coin_counts else {
            continue;
        };
        for a in 0..2 {
            let own = r.goals[a];
            let other = r.goals[1 - a];
            for (color, &n) in counts[a].iter().enumerate() {
                let bucket = if color == own {
                    0
                } else if color == other {
                    1
                } else {
                    2
                };
                sums[bucket] += n as f64;
            }
            samples += 1;
        }
    }
    let denom = samples.max(1) as f64;
    CoinStrategy {
        own_color: sums[0] / denom,
        other_color: sums[1] / denom,
        neither_color: sums[2] / denom,
        samples,
    }
}

/// Earliest 1-based step from which the belief stays equal to the true
/// goal through the end of the trace. `None` when the trace is empty or
/// ends wrong.
pub fn t_inf(trace: &[usize], truth: usize) -> Option<usize> {
    let trailing = trace.iter().rev().take_while(|&&g| g == truth).count();
    (trailing > 0).then(|| trace.len() - trailing + 1)
}

fn inference_samples(records: &[EpisodeRecord]) -> impl Iterator<Item = Option<usize>> + '_ {
    records.iter().flat_map(|r| {
        (0..2).filter_map(move |a| {
            let trace = &r.traces[a];
            (!trace.is_empty()).then(|| t_inf(trace, r.goals[1 - a]))
        })
    })
}

/// Fraction of traced agent-episodes where the belief becomes correct
/// and stays correct for every following step.
pub fn inference_accuracy(records: &[EpisodeRecord]) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for sample in inference_samples(records) {
        total += 1;
        hits += usize::from(sample.is_some());
    }
    hits as f64 / total.max(1) as f64
}

/// Cumulative distribution of `t_inf` over the correctly-inferred
/// subset, one row per step up to the longest counted trace. Empty when
/// nothing was inferred correctly.
pub fn inference_step_cdf(records: &[EpisodeRecord]) -> Vec<(usize, f64)> {
    let mut steps: Vec<usize> = inference_samples(records).flatten().collect();
    if steps.is_empty() {
        return Vec::new();
    }
    steps.sort_unstable();
    let n = steps.len() as f64;
    let last = *steps.last().expect("nonempty");
    let mut rows = Vec::with_capacity(last);
    let mut seen = 0usize;
    for step in 1..=last {
        while seen < steps.len() && steps[seen] == step {
            seen += 1;
        }
        rows.push((step, seen as f64 / n));
    }
    rows
}

/// Rolling win fraction for one seat, one row per full window ending at
/// that record. A window longer than the record set collapses to a
/// single overall mean.
pub fn win_fraction(records: &[EpisodeRecord], agent: PlayerId, window: usize) -> Vec<(usize, f64)> {
    assert!(window > 0, "window must be positive");
    if records.is_empty() {
        return Vec::new();
    }
    let flags: Vec<f64> = records.iter().map(|r| f64::from(r.won[agent])).collect();
    if window > flags.len() {
        let mean = flags.iter().sum::<f64>() / flags.len() as f64;
        return vec![(records[records.len() - 1].episode, mean)];
    }
    (window - 1..flags.len())
        .map(|i| {
            let mean = flags[i + 1 - window..=i].iter().sum::<f64>() / window as f64;
            (records[i].episode, mean)
        })
        .collect()
}

/// One row of the inference-step sweep table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NinfRow {
    pub n_inference_steps: usize,
    pub episodes: usize,
    pub mean_reward: f64,
    pub reward_stddev: f64,
    pub mean_accuracy: f64,
    pub accuracy_stddev: f64,
}

fn mean_and_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    // Summation in a canonical order keeps the result a function of the
    // value multiset, not of how the records happened to be sorted.
    let mut xs = xs.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Group records by their inference-step count and aggregate one seat's
/// reward plus its persistent-inference indicator. Deviations are
/// sample standard deviations. Rows come out sorted by step count.
pub fn ninf_sweep(records: &[EpisodeRecord], agent: PlayerId) -> Vec<NinfRow> {
    let mut groups: std::collections::BTreeMap<usize, (Vec<f64>, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for r in records {
        let entry = groups.entry(r.n_inference_steps).or_default();
        entry.0.push(r.rewards[agent]);
        if !r.traces[agent].is_empty() {
            entry
                .1
                .push(f64::from(t_inf(&r.traces[agent], r.goals[1 - agent]).is_some()));
        }
    }
    groups
        .into_iter()
        .map(|(n, (rewards, hits))| {
            let (mean_reward, reward_stddev) = mean_and_stddev(&rewards);
            let (mean_accuracy, accuracy_stddev) = mean_and_stddev(&hits);
            NinfRow {
                n_inference_steps: n,
                episodes: rewards.len(),
                mean_reward,
                reward_stddev,
                mean_accuracy,
                accuracy_stddev,
            }
        })
        .collect()
}

/// CSV emitters. One header line, `\n` separators, floats via the
/// shortest round-trip formatting, empty cells for absent values.
pub mod csv {
    use super::{CoinStrategy, EpisodeRecord, NinfRow};

    pub const EPISODES_HEADER: &str = "episode,seed,n_inference_steps,reward0,reward1,won0,won1,goal0,goal1,t_inf0,t_inf1,coins_own0,coins_other0,coins_neither0,coins_own1,coins_other1,coins_neither1";

    /// Per-episode stream behind every other table.
    pub fn episodes(records: &[EpisodeRecord]) -> String {
        let mut out = String::from(EPISODES_HEADER);
        out.push('\n');
        for r in records {
            let tinfs: [String; 2] = std::array::from_fn(|a| {
                if r.traces[a].is_empty() {
                    String::new()
                } else {
                    super::t_inf(&r.traces[a], r.goals[1 - a])
                        .map(|t| t.to_string())
                        .unwrap_or_default()
                }
            });
            let coins: [String; 6] = match r.coin_counts {
                None => std::array::from_fn(|_| String::new()),
                Some(counts) => std::array::from_fn(|i| {
                    let (a, bucket) = (i / 3, i % 3);
                    let own = r.goals[a];
                    let other = r.goals[1 - a];
                    let total: usize = counts[a]
                        .iter()
                        .enumerate()
                        .filter(|(color, _)| match bucket {
                            0 => *color == own,
                            1 => *color == other && *color != own,
                            _ => *color != own && *color != other,
                        })
                        .map(|(_, n)| n)
                        .sum();
                    total.to_string()
                }),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.episode,
                r.seed,
                r.n_inference_steps,
                r.rewards[0],
                r.rewards[1],
                u8::from(r.won[0]),
                u8::from(r.won[1]),
                r.goals[0],
                r.goals[1],
                tinfs.join(","),
                coins[..3].join(","),
                coins[3..].join(","),
            ));
        }
        out
    }

    pub const COIN_STRATEGY_HEADER: &str = "coins_own_color,coins_other_color,coins_neither_color,samples";

    pub fn coin_strategy(s: &CoinStrategy) -> String {
        format!(
            "{}\n{},{},{},{}\n",
            COIN_STRATEGY_HEADER, s.own_color, s.other_color, s.neither_color, s.samples
        )
    }

    pub const CDF_HEADER: &str = "step,cumulative_fraction";

    pub fn inference_step_cdf(rows: &[(usize, f64)]) -> String {
        let mut out = String::from(CDF_HEADER);
        out.push('\n');
        for (step, frac) in rows {
            out.push_str(&format!("{step},{frac}\n"));
        }
        out
    }

    pub const WIN_HEADER: &str = "episode,win_fraction";

    pub fn win_fraction(rows: &[(usize, f64)]) -> String {
        let mut out = String::from(WIN_HEADER);
        out.push('\n');
        for (ep, frac) in rows {
            out.push_str(&format!("{ep},{frac}\n"));
        }
        out
    }

    pub const NINF_HEADER: &str =
        "n_inference_steps,episodes,mean_reward,reward_stddev,mean_accuracy,accuracy_stddev";

    pub fn ninf_sweep(rows: &[NinfRow]) -> String {
        let mut out = String::from(NINF_HEADER);
        out.push('\n');
        for r in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n_inference_steps,
                r.episodes,
                r.mean_reward,
                r.reward_stddev,
                r.mean_accuracy,
                r.accuracy_stddev
            ));
        }
        out
    }
}
