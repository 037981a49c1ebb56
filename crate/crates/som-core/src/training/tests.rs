use rand::Rng;

use crate::agents::{
    BaselineAgent, BaselineKind, EpisodeTape, InferenceConfig, Player, ScriptedPolicy, SomAgent,
};
use crate::autodiff::{grad_check, FD_EPS, GRAD_CHECK_TOL};
use crate::autodiff::{ParamSet, Tensor};
use crate::envs::{CoinConfig, GameSpec, GoalAssignment};
use crate::neural::{NetDims, RecurrentCore};
use crate::rng;

use super::pretrain::{
    behavior_clone, clone_accuracy, fresh_som, pretrain_recipe, scripted_dataset, warm_start,
};
use super::*;

fn tiny_coin() -> GameSpec {
    GameSpec::Coin(CoinConfig {
        width: 4,
        height: 4,
        coins_per_color: 1,
    })
}

fn som_pair(spec: &GameSpec, hidden: usize, seed: u64) -> [Player; 2] {
    let mut rng = rng::stream(seed);
    [
        Player::Som(SomAgent::new(
            spec,
            hidden,
            InferenceConfig::default(),
            &mut rng,
        )),
        Player::Som(SomAgent::new(
            spec,
            hidden,
            InferenceConfig::default(),
            &mut rng,
        )),
    ]
}

#[test]
fn returns_match_the_brute_force_sum() {
    let mut rng = rng::stream(11);
    for &gamma in &[0.0, 0.5, 0.99] {
        for len in [1usize, 3, 17] {
            let rewards: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let fast = discounted_returns(&rewards, gamma);
            for t in 0..len {
                // Horner evaluation of the same tail; only the starting
                // index differs from the implementation's full sweep.
                let mut expect = 0.0;
                for k in (t..len).rev() {
                    expect = rewards[k] + gamma * expect;
                }
                assert_eq!(fast[t], expect, "gamma {gamma} len {len} t {t}");
            }
        }
    }
}

#[test]
fn returns_of_an_empty_tape_are_empty() {
    assert!(discounted_returns(&[], 0.99).is_empty());
}

/// Longhand Adam on plain vectors, kept deliberately separate from the
/// optimizer under test.
struct RefAdam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl RefAdam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, w: &mut [f64], g: &[f64], cfg: AdamConfig) {
        self.t += 1;
        for i in 0..w.len() {
            let grad = g[i] + cfg.weight_decay * w[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad * grad;
            let m_hat = self.m[i] / (1.0 - cfg.beta1.powf(f64::from(self.t)));
            let v_hat = self.v[i] / (1.0 - cfg.beta2.powf(f64::from(self.t)));
            w[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[test]
fn adam_matches_a_longhand_reference_for_a_hundred_steps() {
    let mut rng = rng::stream(5);
    let mut params = ParamSet::new();
    let w_init = Tensor::matrix(3, 4, (0..12).map(|i| f64::from(i) / 7.0).collect());
    let b_init = Tensor::vector(vec![0.3, -0.2, 0.05]);
    let frozen_init = Tensor::vector(vec![1.0, 2.0]);
    params.add("w", w_init);
    params.add("b", b_init);
    params.add_frozen("anchor", frozen_init.clone());

    let cfg = AdamConfig {
        lr: 1e-3,
        weight_decay: 0.01,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(params.scalar_count(), cfg);

    // Reference operates on the 15 trainable scalars only.
    let mut ref_adam = RefAdam::new(15);
    let mut ref_w: Vec<f64> = params.flatten_values()[..15].to_vec();

    for _ in 0..100 {
        let grads: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Inject the exact gradients through the graph path: the loss
        // sum(g .* theta) has gradient g.
        let mut graph = crate::Graph::new();
        let binding = params.bind(&mut graph);
        let mut terms = Vec::new();
        let mut off = 0;
        for (id, p) in params.iter().collect::<Vec<_>>() {
            if !p.trainable() {
                continue;
            }
            let n = p.value().len();
            let coeff = Tensor::from_shape(p.value().shape().to_vec(), grads[off..off + n].to_vec());
            let c = graph.input(coeff);
            let prod = graph.mul(binding.node(id), c);
            terms.push(graph.sum(prod));
            off += n;
        }
        let loss = graph.sum_scalars(&terms);
        graph.backward(loss).unwrap();
        params.zero_grads();
        params.accumulate_grads(&graph, &binding);
        adam.step(&mut params);

        ref_adam.step(&mut ref_w, &grads, cfg);
    }

    let got = params.flatten_values();
    for i in 0..15 {
        assert!(
            (got[i] - ref_w[i]).abs() <= 1e-12,
            "scalar {i}: {} vs reference {}",
            got[i],
            ref_w[i]
        );
    }
    assert_eq!(&got[15..], frozen_init.data(), "frozen values moved");
    assert_eq!(adam.t(), 100);
}

/// A synthetic three-step episode on a small predict-headed core; the
/// frozen inputs make the loss a deterministic function of the flat
/// parameter vector, which is what the finite-difference check needs.
struct SyntheticEpisode {
    dims: NetDims,
    inputs: Vec<Tensor>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    predict_targets: Vec<Option<usize>>,
}

impl SyntheticEpisode {
    fn random(seed: u64) -> Self {
        let dims = NetDims {
            input: 6,
            hidden: 5,
            nactions: 4,
        };
        let mut rng = rng::stream(seed);
        let steps = 3;
        Self {
            dims,
            inputs: (0..steps)
                .map(|_| Tensor::vector((0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()))
                .collect(),
            actions: (0..steps).map(|_| rng.gen_range(0..4)).collect(),
            rewards: (0..steps).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            predict_targets: (0..steps)
                .map(|i| (i % 2 == 0).then(|| rng.gen_range(0..4)))
                .collect(),
        }
    }

    fn build_params(&self, seed: u64) -> (ParamSet, RecurrentCore) {
        let mut params = ParamSet::new();
        let mut rng = rng::stream(seed);
        let core = RecurrentCore::new(&mut params, "net.", self.dims, true, &mut rng);
        (params, core)
    }

    /// Replay the frozen episode onto a fresh tape.
    fn tape_at(&self, core: &RecurrentCore, params: &ParamSet) -> EpisodeTape {
        let mut tape = EpisodeTape::new(params, self.dims.hidden);
        for t in 0..self.inputs.len() {
            let s = tape.graph.input(self.inputs[t].clone());
            let rec = tape.rec();
            let step = core.step(&mut tape.graph, &tape.binding, s, rec).unwrap();
            tape.record(
                step.policy,
                step.value,
                step.predict,
                (step.h, step.c),
                self.actions[t],
            );
            if let Some(target) = self.predict_targets[t] {
                tape.pair_prediction(target);
            }
            tape.add_reward(self.rewards[t]);
        }
        tape
    }

    /// Loss and flat gradient at `flat`; with `pinned` given, the policy
    /// term uses those fixed weights instead of the live detached
    /// advantage, making the result a plain function of the parameters.
    fn loss_and_grad(
        &self,
        core: &RecurrentCore,
        template: &ParamSet,
        flat: &[f64],
        cfg: &TrainConfig,
        pinned: Option<&[f64]>,
    ) -> (f64, Vec<f64>) {
        let mut params = template.clone();
        params.load_flat(flat);
        let mut tape = self.tape_at(core, &params);
        let loss = match pinned {
            None => episode_loss(&mut tape, cfg),
            Some(a) => pinned_advantage_loss(&mut tape, cfg, a),
        }
        .expect("tape has steps");
        tape.graph.backward(loss).unwrap();
        params.zero_grads();
        params.accumulate_grads(&tape.graph, &tape.binding);
        (tape.graph.value(loss).item(), params.flatten_grads())
    }
}

#[test]
fn episode_loss_gradient_matches_finite_differences() {
    let episode = SyntheticEpisode::random(21);
    let (params, core) = episode.build_params(22);
    let cfg = TrainConfig::default();
    let flat = params.flatten_values();

    // The policy-term weight is a stopgrad: differencing must hold it at
    // its base-point values or it measures a different function.
    let base = advantage_values(&episode.tape_at(&core, &params), cfg.gamma);
    let report = grad_check(
        |theta| episode.loss_and_grad(&core, &params, theta, &cfg, Some(&base)),
        &flat,
        FD_EPS,
    );
    assert!(
        report.max_rel_err < GRAD_CHECK_TOL,
        "worst rel err {} at scalar {} (analytic {}, numeric {})",
        report.max_rel_err,
        report.worst_index,
        report.analytic_at_worst,
        report.numeric_at_worst
    );

    // At the base point the live detached loss and the pinned loss are
    // the same function with the same gradient, scalar for scalar.
    let (loss_live, grads_live) = episode.loss_and_grad(&core, &params, &flat, &cfg, None);
    let (loss_pin, grads_pin) = episode.loss_and_grad(&core, &params, &flat, &cfg, Some(&base));
    assert_eq!(loss_live, loss_pin);
    assert_eq!(grads_live, grads_pin);
}

#[test]
fn zero_advantages_silence_the_policy_head_only() {
    let episode = SyntheticEpisode::random(41);
    let (params, core) = episode.build_params(42);
    let cfg = TrainConfig {
        entropy_coef: 0.0,
        aux_coef: 0.0,
        ..TrainConfig::default()
    };
    let flat = params.flatten_values();
    let zeros = vec![0.0; episode.inputs.len()];
    let (_, grads) = episode.loss_and_grad(&core, &params, &flat, &cfg, Some(&zeros));
    let slot = |name: &str| {
        let mut off = 0;
        for (_, p) in params.iter() {
            if p.name() == name {
                return off..off + p.value().len();
            }
            off += p.value().len();
        }
        panic!("no parameter named {name}");
    };
    assert!(grads[slot("net.policy.w")].iter().all(|g| *g == 0.0));
    assert!(grads[slot("net.policy.b")].iter().all(|g| *g == 0.0));
    // The value head still learns from its squared error.
    assert!(grads[slot("net.value.w")].iter().any(|g| *g != 0.0));
}

#[test]
fn entropy_of_a_uniform_policy_is_ln_k() {
    let params = ParamSet::new();
    let mut tape = EpisodeTape::new(&params, 1);
    let logits = tape.graph.input(Tensor::zeros(&[5]));
    let policy = tape.graph.softmax(logits);
    let value = tape.graph.input(Tensor::scalar(0.0));
    let rec = tape.rec();
    tape.record(policy, value, None, rec, 0);
    let cfg = TrainConfig {
        entropy_coef: 1.0,
        ..TrainConfig::default()
    };
    let loss = episode_loss(&mut tape, &cfg).unwrap();
    // Reward and value are zero, so only the entropy bonus remains.
    let got = tape.graph.value(loss).item();
    assert!((got + 5.0f64.ln()).abs() < 1e-12, "got {got}");
}

#[test]
fn returns_match_the_handworked_example() {
    let got = discounted_returns(&[0.0, 0.0, 1.0], 0.99);
    let expect = [0.9801, 0.99, 1.0];
    for (g, e) in got.iter().zip(&expect) {
        assert!((g - e).abs() < 1e-12);
    }
    assert_eq!(discounted_returns(&[1.5, -2.0, 0.25], 0.0), vec![1.5, -2.0, 0.25]);
}

#[test]
fn zero_gradients_leave_parameters_alone() {
    let mut params = ParamSet::new();
    params.add("w", Tensor::vector(vec![0.4, -1.2, 3.0]));
    let before = params.flatten_values();
    let mut adam = AdamState::new(3, AdamConfig::default());
    adam.step(&mut params);
    adam.step(&mut params);
    assert_eq!(params.flatten_values(), before);
}

#[test]
fn advantage_is_detached_from_the_value_head() {
    let episode = SyntheticEpisode::random(31);
    let (params, core) = episode.build_params(32);
    let flat = params.flatten_values();

    let grads_for = |cfg: &TrainConfig| {
        let (_, grads) = episode.loss_and_grad(&core, &params, &flat, cfg, None);
        grads
    };

    // With the squared-advantage term switched off, nothing should pull
    // on the value head: its only gradient source is its own error.
    let policy_only = TrainConfig {
        value_coef: 0.0,
        entropy_coef: 0.0,
        aux_coef: 0.0,
        ..TrainConfig::default()
    };
    let grads = grads_for(&policy_only);
    let slot = |name: &str| {
        let mut off = 0;
        for (_, p) in params.iter() {
            if p.name() == name {
                return off..off + p.value().len();
            }
            off += p.value().len();
        }
        panic!("no parameter named {name}");
    };
    assert!(
        grads[slot("net.value.w")].iter().all(|g| *g == 0.0),
        "value weights got gradient through the detached advantage"
    );
    assert!(grads[slot("net.value.b")].iter().all(|g| *g == 0.0));
    assert!(
        grads[slot("net.policy.w")].iter().any(|g| *g != 0.0),
        "policy got no learning signal at all"
    );

    // Turning the value term back on must not alter the policy head's
    // gradient: the two heads only share the trunk.
    let with_value = TrainConfig {
        value_coef: 0.5,
        entropy_coef: 0.0,
        aux_coef: 0.0,
        ..TrainConfig::default()
    };
    let grads_v = grads_for(&with_value);
    assert_eq!(
        &grads[slot("net.policy.w")],
        &grads_v[slot("net.policy.w")],
        "value loss leaked into the policy head"
    );
    assert!(grads_v[slot("net.value.w")].iter().any(|g| *g != 0.0));
}

#[test]
fn episode_seeds_are_pure_and_spread_out() {
    assert_eq!(episode_seed(7, 3), episode_seed(7, 3));
    let seeds: std::collections::HashSet<u64> =
        (0..1000).map(|e| episode_seed(42, e)).collect();
    assert_eq!(seeds.len(), 1000, "collisions in the first thousand");
    assert_ne!(episode_seed(1, 0), episode_seed(2, 0));
}

#[test]
fn one_worker_training_is_bit_reproducible() {
    let spec = tiny_coin();
    let cfg = TrainConfig::default();
    let run = || {
        let mut players = som_pair(&spec, 12, 900);
        let mut outcomes = Vec::new();
        train(&mut players, &spec, GoalAssignment::Standard, &cfg, 4, 77, |_, o| {
            outcomes.push((o.rewards, o.losses));
        });
        let bits: Vec<Vec<u64>> = players
            .iter()
            .map(|p| {
                p.params()
                    .unwrap()
                    .flatten_values()
                    .iter()
                    .map(|v| v.to_bits())
                    .collect()
            })
            .collect();
        (bits, outcomes)
    };
    let (bits_a, out_a) = run();
    let (bits_b, out_b) = run();
    assert_eq!(bits_a, bits_b, "weights diverged between identical runs");
    for (a, b) in out_a.iter().zip(&out_b) {
        assert_eq!(a.0[0].to_bits(), b.0[0].to_bits());
        assert_eq!(a.0[1].to_bits(), b.0[1].to_bits());
        assert_eq!(a.1[0].map(f64::to_bits), b.1[0].map(f64::to_bits));
        assert_eq!(a.1[1].map(f64::to_bits), b.1[1].map(f64::to_bits));
    }
}

#[test]
fn extra_workers_play_from_the_round_snapshot() {
    let spec = tiny_coin();
    let mut solo = som_pair(&spec, 12, 900);
    let mut pooled = som_pair(&spec, 12, 900);
    let cfg1 = TrainConfig::default();
    let cfg2 = TrainConfig {
        workers: 2,
        ..TrainConfig::default()
    };
    train(&mut solo, &spec, GoalAssignment::Standard, &cfg1, 4, 77, |_, _| {});
    train(&mut pooled, &spec, GoalAssignment::Standard, &cfg2, 4, 77, |_, _| {});
    let flat = |p: &Player| p.params().unwrap().flatten_values();
    // Episode 1 of round 0 plays from stale weights under two workers,
    // so the trajectories and hence the updates must differ.
    assert_ne!(flat(&solo[0]), flat(&pooled[0]));
    for v in flat(&pooled[0]).iter().chain(flat(&pooled[1]).iter()) {
        assert!(v.is_finite());
    }
}

#[test]
fn episodes_replay_identically_for_a_fixed_seed() {
    let spec = tiny_coin();
    let run = || {
        let mut players = som_pair(&spec, 12, 31);
        let mut rng = rng::substream(5, "play");
        let outcome = run_episode(&mut players, &spec, GoalAssignment::Standard, 5, &mut rng);
        (outcome.replay.to_text(), outcome.rewards)
    };
    let (text_a, rew_a) = run();
    let (text_b, rew_b) = run();
    assert_eq!(text_a, text_b);
    assert_eq!(rew_a[0].to_bits(), rew_b[0].to_bits());
    assert_eq!(rew_a[1].to_bits(), rew_b[1].to_bits());
}

#[test]
fn training_against_a_script_fills_only_one_loss_slot() {
    let spec = tiny_coin();
    let mut rng = rng::stream(3);
    let mut players = [
        Player::Som(SomAgent::new(&spec, 12, InferenceConfig::default(), &mut rng)),
        Player::Scripted(ScriptedPolicy),
    ];
    let mut saw = 0;
    train(
        &mut players,
        &spec,
        GoalAssignment::Standard,
        &TrainConfig::default(),
        3,
        9,
        |_, o| {
            assert!(o.losses[0].is_some());
            assert!(o.losses[1].is_none());
            assert!(o.losses[0].unwrap().is_finite());
            saw += 1;
        },
    );
    assert_eq!(saw, 3);
}

#[test]
fn prediction_training_makes_a_scripted_opponent_less_surprising() {
    let spec = tiny_coin();
    let mut rng = rng::stream(14);
    let ipp = BaselineAgent::new(BaselineKind::Ipp, &spec, 16, &mut rng);
    let mut players = [Player::Baseline(ipp), Player::Scripted(ScriptedPolicy)];

    // Mean cross-entropy of the paired predictions over some fresh
    // episodes, without updating anything.
    let probe = |players: &mut [Player; 2]| {
        let mut total = 0.0;
        let mut count = 0;
        for ep in 0..20 {
            let seed = episode_seed(1000, ep);
            let mut play = rng::substream(seed, "probe");
            run_episode(players, &spec, GoalAssignment::Standard, seed, &mut play);
            let tape = players[0].take_tape().unwrap();
            for step in &tape.steps {
                if let (Some(pred), Some(target)) = (step.predict, step.predict_target) {
                    let p = tape.graph.value(pred).data()[target].max(1e-20);
                    total -= p.ln();
                    count += 1;
                }
            }
            players[1].take_tape();
        }
        total / f64::from(count)
    };

    let before = probe(&mut players);
    let cfg = TrainConfig {
        adam: AdamConfig::with_lr(3e-3),
        ..TrainConfig::default()
    };
    train(&mut players, &spec, GoalAssignment::Standard, &cfg, 150, 4, |_, _| {});
    let after = probe(&mut players);
    assert!(
        after < before,
        "prediction loss did not improve: {before} -> {after}"
    );
}

#[test]
fn pool_training_seats_distinct_members() {
    let spec = tiny_coin();
    let mut rng = rng::stream(8);
    let mut pool: Vec<Player> = (0..3)
        .map(|_| Player::Som(SomAgent::new(&spec, 8, InferenceConfig::default(), &mut rng)))
        .collect();
    let before: Vec<Vec<f64>> = pool
        .iter()
        .map(|p| p.params().unwrap().flatten_values())
        .collect();
    let mut seatings = Vec::new();
    train_pool(
        &mut pool,
        &spec,
        GoalAssignment::Standard,
        &TrainConfig::default(),
        6,
        123,
        |_, seats, outcome| {
            seatings.push(seats);
            assert!(outcome.rewards[0].is_finite());
        },
    );
    for [i, j] in &seatings {
        assert_ne!(i, j, "a player was seated against itself");
        assert!(*i < 3 && *j < 3);
    }
    let moved = pool
        .iter()
        .zip(&before)
        .filter(|(p, b)| &p.params().unwrap().flatten_values() != *b)
        .count();
    assert!(moved >= 2, "training left the pool untouched");
}

#[test]
fn warm_start_preserves_behavior_on_the_shared_inputs() {
    // A narrow-input core next to a wide-input one: after the copy, the
    // wide net must compute exactly the same outputs whenever its extra
    // inputs hit the zeroed columns.
    let dims_narrow = NetDims {
        input: 7,
        hidden: 6,
        nactions: 3,
    };
    let dims_wide = NetDims {
        input: 10,
        hidden: 6,
        nactions: 3,
    };
    let mut rng = rng::stream(51);
    let mut src = ParamSet::new();
    let narrow = RecurrentCore::new(&mut src, "net.", dims_narrow, false, &mut rng);
    let mut dst = ParamSet::new();
    let wide = RecurrentCore::new(&mut dst, "net.", dims_wide, false, &mut rng);

    let copied = warm_start(&src, &mut dst);
    assert_eq!(copied, 11, "expected every tensor to transfer");

    let base: Vec<f64> = (0..7).map(|i| 0.3 * i as f64 - 1.0).collect();
    let mut padded = base.clone();
    padded.extend_from_slice(&[0.0, 0.0, 0.0]);

    let run = |params: &ParamSet, core: &RecurrentCore, input: &[f64], hidden: usize| {
        let mut graph = crate::Graph::new();
        let binding = params.bind(&mut graph);
        let rec = crate::neural::RecurrentState::zeros(hidden).enter(&mut graph);
        let s = graph.input(Tensor::vector(input.to_vec()));
        let step = core.step(&mut graph, &binding, s, rec).unwrap();
        (
            graph.value(step.policy).data().to_vec(),
            graph.value(step.value).item(),
        )
    };

    let (p_narrow, v_narrow) = run(&src, &narrow, &base, 6);
    let (p_wide, v_wide) = run(&dst, &wide, &padded, 6);
    assert_eq!(p_narrow, p_wide, "policies diverged after the transfer");
    assert_eq!(v_narrow, v_wide);

    // A nonzero value in the new columns changes the output, proving
    // the extra inputs are wired in rather than ignored by shape.
    let mut hot = base.clone();
    hot.extend_from_slice(&[1.0, 0.0, 0.0]);
    let narrow_cols = dst.id("net.fc1.w").unwrap();
    dst.value_mut(narrow_cols).data_mut()[7] = 0.5;
    let (p_hot, _) = run(&dst, &wide, &hot, 6);
    assert_ne!(p_narrow, p_hot);
}

#[test]
fn warm_start_between_agents_transfers_the_acting_net() {
    // A solo-input baseline expands into the two-slot architecture.
    let spec = tiny_coin();
    let mut rng = rng::stream(61);
    let nom = BaselineAgent::new(BaselineKind::Nom, &spec, 10, &mut rng);
    let mut som = SomAgent::new(&spec, 10, InferenceConfig::default(), &mut rng);
    let copied = warm_start(&nom.params, &mut som.params);
    assert_eq!(copied, 11);
    let fc1 = som.params.value(som.params.id("net.fc1.w").unwrap());
    let cols = fc1.shape()[1];
    let ngoals = spec.ngoals();
    // The freshly added other-goal columns are zero.
    for r in 0..fc1.shape()[0] {
        for c in cols - ngoals..cols {
            assert_eq!(fc1.data()[r * cols + c], 0.0);
        }
    }
}

#[test]
fn pretraining_reports_a_crafting_rate() {
    let mut rng = rng::stream(71);
    let spec = GameSpec::Recipe;
    let mut players = [
        Player::Baseline(BaselineAgent::new(BaselineKind::Nom, &spec, 12, &mut rng)),
        Player::Baseline(BaselineAgent::new(BaselineKind::Nom, &spec, 12, &mut rng)),
    ];
    let rate = pretrain_recipe(&mut players, &TrainConfig::default(), 8, 8, 5);
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn behavior_cloning_learns_the_scripted_moves() {
    let spec = tiny_coin();
    let data = scripted_dataset(&spec, GoalAssignment::Standard, 25, 303, 0.0);
    assert_eq!(data.episodes.len(), 25);
    let steps: usize = data
        .episodes
        .iter()
        .map(|e| e.seats[0].len() + e.seats[1].len())
        .sum();
    assert_eq!(steps, 25 * 20, "every acting step should be captured");

    let mut agent = fresh_som(&spec, 20, 10, 99);
    let before = clone_accuracy(&agent, &data);
    let history = behavior_clone(&mut agent, &data, 6, 3e-3);
    let after = clone_accuracy(&agent, &data);
    assert!(
        history.last().unwrap() < history.first().unwrap(),
        "cloning loss went up: {history:?}"
    );
    assert!(
        after > before && after > 0.5,
        "cloned accuracy {after} (was {before})"
    );
}

