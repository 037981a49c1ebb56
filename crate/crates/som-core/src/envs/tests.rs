use super::coin::CoinState;
use super::door::DoorState;
use super::recipe::{recipe_needs, RecipeState};
use super::*;
use rand::Rng;

fn all_specs() -> Vec<GameSpec> {
    vec![GameSpec::coin_default(), GameSpec::Recipe, GameSpec::Door]
}

/// Play an episode choosing actions with `pick`, returning every
/// outcome in order.
fn play(
    state: &mut GameState,
    mut pick: impl FnMut(&GameState) -> Action,
) -> Vec<StepOutcome> {
    let mut outs = Vec::new();
    while !state.is_over() {
        let actor = state.acting_agent();
        let action = pick(state);
        outs.push(state.step(actor, action).unwrap());
    }
    outs
}

fn random_action(state: &GameState, rng: &mut crate::rng::Stream) -> Action {
    let actions = state.spec().actions();
    actions[rng.gen_range(0..actions.len())]
}

#[test]
fn coin_reward_matches_hand_computation() {
    let st = CoinState {
        width: 8,
        height: 8,
        positions: [(0, 0), (1, 1)],
        coins: Vec::new(),
        counts: [[2, 1, 0], [1, 3, 2]],
    };
    // Joint totals per color: 3, 4, 2.
    assert_eq!(st.terminal_reward(&[0, 1]), 9.0 + 16.0 - 4.0);
    assert_eq!(st.terminal_reward(&[2, 0]), 4.0 + 9.0 - 16.0);
    // A doubled-up goal counts its color once.
    assert_eq!(st.terminal_reward(&[1, 1]), 16.0 - 9.0 - 4.0);
}

#[test]
fn coin_reset_produces_a_legal_board() {
    let spec = GameSpec::coin_default();
    for seed in 0..50 {
        let st = GameState::reset(&spec, seed, GoalAssignment::Standard);
        let coins = st.coin_positions().unwrap().to_vec();
        assert_eq!(coins.len(), 12);
        let mut cells: Vec<(usize, usize)> = coins.iter().map(|&(x, y, _)| (x, y)).collect();
        cells.push(st.agent_position(0));
        cells.push(st.agent_position(1));
        let n = cells.len();
        cells.sort_unstable();
        cells.dedup();
        assert_eq!(cells.len(), n, "agents and coins overlap at seed {seed}");
        let remaining = st.coins_remaining().unwrap();
        assert_eq!(remaining, [4, 4, 4]);
        let [g0, g1] = st.goals();
        assert!(g0 < 3 && g1 < 3 && g0 != g1);
        assert_eq!(st.coin_counts().unwrap(), [[0; 3]; 2]);
    }
}

#[test]
fn coin_pickup_and_walls() {
    let mut st = CoinState {
        width: 3,
        height: 3,
        positions: [(0, 0), (2, 2)],
        coins: vec![(1, 0, 2)],
        counts: [[0; 3]; 2],
    };
    let mut events = Vec::new();
    st.apply(0, Action::Right, &mut events);
    assert_eq!(
        events,
        vec![Event::CoinTaken {
            color: 2,
            x: 1,
            y: 0
        }]
    );
    assert_eq!(st.positions[0], (1, 0));
    assert_eq!(st.counts[0][2], 1);
    assert!(st.coins.is_empty());

    // Walking off the grid wastes the turn but changes nothing.
    events.clear();
    st.apply(0, Action::Up, &mut events);
    assert!(events.is_empty());
    assert_eq!(st.positions[0], (1, 0));
}

#[test]
fn turns_alternate_and_time_runs_out() {
    let spec = GameSpec::coin_default();
    let mut st = GameState::reset(&spec, 7, GoalAssignment::Standard);
    let first = st.first_actor();
    assert_eq!(st.acting_agent(), first);

    // Acting out of turn is rejected and leaves the state alone.
    let err = st.step(1 - first, Action::Pass).unwrap_err();
    assert!(matches!(err, EnvError::OutOfTurn { .. }));
    assert_eq!(st.acting_agent(), first);
    assert_eq!(st.steps_taken(), 0);

    let mut outs = Vec::new();
    for i in 0..spec.total_steps() {
        assert_eq!(st.acting_agent(), (first + i) % 2);
        outs.push(st.step(st.acting_agent(), Action::Pass).unwrap());
    }
    assert!(st.is_over());
    assert!(outs.iter().take(outs.len() - 1).all(|o| !o.done));
    assert!(outs.last().unwrap().done);
    assert!(matches!(
        st.step(first, Action::Pass),
        Err(EnvError::GameOver)
    ));
}

#[test]
fn coin_episodes_last_exactly_twenty_actions() {
    let spec = GameSpec::coin_default();
    for seed in 0..20 {
        let mut rng = crate::rng::stream(seed ^ 0xc0ffee);
        let mut st = GameState::reset(&spec, seed, GoalAssignment::Standard);
        let outs = play(&mut st, |s| random_action(s, &mut rng));
        assert_eq!(outs.len(), 20);
    }
}

#[test]
fn coins_are_conserved() {
    let spec = GameSpec::coin_default();
    let mut rng = crate::rng::stream(99);
    let mut st = GameState::reset(&spec, 3, GoalAssignment::Standard);
    while !st.is_over() {
        let a = random_action(&st, &mut rng);
        st.step(st.acting_agent(), a).unwrap();
        let collected: usize = st.coin_counts().unwrap().iter().flatten().sum();
        let remaining: usize = st.coins_remaining().unwrap().iter().sum();
        assert_eq!(collected + remaining, 12);
    }
}

#[test]
fn recipe_reset_produces_a_legal_board() {
    for seed in 0..50 {
        let st = GameState::reset(&GameSpec::Recipe, seed, GoalAssignment::Standard);
        let items = st.item_positions().unwrap().to_vec();
        assert_eq!(items.len(), 8);
        for ty in 0..4 {
            let of_type: Vec<_> = items.iter().filter(|&&(_, _, t)| t == ty).collect();
            assert_eq!(of_type.len(), 2, "type {ty} at seed {seed}");
            let (lx, ly, _) = *of_type[0];
            let (rx, ry, _) = *of_type[1];
            assert_eq!(ly, ry, "mirrored items share a row");
            assert_eq!(lx + rx, 5, "mirrored items reflect around the center");
            assert!(lx == 1 || lx == 2);
        }
        let (x0, y0) = st.agent_position(0);
        let (x1, y1) = st.agent_position(1);
        assert_eq!(y0, y1, "players start in the same row");
        assert_eq!([x0.min(x1), x0.max(x1)], [0, 5]);

        let [g0, g1] = st.goals();
        let gap = (g1 + 4 - g0) % 4;
        assert!(gap == 1 || gap == 3, "standard recipes are neighbors");

        let non = GameState::reset(&GameSpec::Recipe, seed, GoalAssignment::NonOverlapping);
        let [n0, n1] = non.goals();
        assert_eq!(n1, (n0 + 2) % 4, "non-overlapping recipes are opposite");
        let needs0 = recipe_needs(n0);
        let needs1 = recipe_needs(n1);
        assert!(
            (0..4).all(|t| needs0[t] == 0 || needs1[t] == 0),
            "non-overlapping recipes share no ingredient"
        );
    }
}

#[test]
fn recipe_rewards_match_hand_computation() {
    assert_eq!(recipe_needs(0), [2, 1, 0, 0]);
    assert_eq!(recipe_needs(3), [1, 0, 0, 2]);

    let mut st = RecipeState {
        positions: [(0, 0), (5, 0)],
        items: Vec::new(),
        inventory: [[0; 4]; 2],
    };
    st.inventory[0] = [2, 1, 0, 0];
    assert!(st.crafted(0, 0));
    assert_eq!(st.terminal_reward(0, 0), 1.0);

    // Crafted with two spare items picked up.
    st.inventory[0] = [3, 1, 0, 1];
    assert!(st.crafted(0, 0));
    assert!((st.terminal_reward(0, 0) - 0.8).abs() < 1e-12);

    // One ingredient short.
    st.inventory[0] = [1, 1, 0, 0];
    assert!(!st.crafted(0, 0));
    assert_eq!(st.terminal_reward(0, 0), 0.0);

    // Nothing useful, four junk items.
    st.inventory[0] = [0, 0, 2, 2];
    assert!((st.terminal_reward(0, 0) + 0.4).abs() < 1e-12);
}

#[test]
fn recipe_pick_takes_exactly_the_item_underfoot() {
    let mut st = RecipeState {
        positions: [(1, 1), (5, 0)],
        items: vec![(1, 1, 3), (2, 1, 0)],
        inventory: [[0; 4]; 2],
    };
    let mut events = Vec::new();
    st.apply(0, Action::Pick, &mut events);
    assert_eq!(
        events,
        vec![Event::ItemTaken {
            item: 3,
            x: 1,
            y: 1
        }]
    );
    assert_eq!(st.inventory[0], [0, 0, 0, 1]);
    assert_eq!(st.items.len(), 1);

    // Picking on an empty cell is a wasted turn.
    events.clear();
    st.apply(0, Action::Pick, &mut events);
    assert!(events.is_empty());
    assert_eq!(st.inventory[0], [0, 0, 0, 1]);
}

#[test]
fn items_are_conserved() {
    let mut rng = crate::rng::stream(4242);
    let mut st = GameState::reset(&GameSpec::Recipe, 11, GoalAssignment::Standard);
    while !st.is_over() {
        let a = random_action(&st, &mut rng);
        st.step(st.acting_agent(), a).unwrap();
        let held: usize = (0..2).map(|p| st.inventory(p).unwrap().iter().sum::<usize>()).sum();
        assert_eq!(held + st.item_positions().unwrap().len(), 8);
    }
}

#[test]
fn doors_block_until_a_switch_is_held() {
    let mut st = DoorState {
        positions: [(2, 3), (4, 0)],
        reached_goal: false,
    };
    let mut events = Vec::new();
    let mut rewards = [0.0; 2];

    // Door 3 is closed: the move is wasted but still costs 0.1.
    st.apply(0, Action::Left, 3, &mut events, &mut rewards);
    assert_eq!(st.positions[0], (2, 3));
    assert!(events.is_empty());
    assert!((rewards[0] + 0.1).abs() < 1e-12);

    // Partner holds switch 3: the same move now passes the door.
    st.positions[1] = (8, 3);
    st.apply(0, Action::Left, 3, &mut events, &mut rewards);
    assert_eq!(st.positions[0], (1, 3));
    assert!(events.is_empty());

    // One more step west lands on the goal.
    st.apply(0, Action::Left, 3, &mut events, &mut rewards);
    assert_eq!(st.positions[0], (0, 3));
    assert_eq!(events, vec![Event::GoalReached]);
    assert!(st.reached_goal);
}

#[test]
fn door_goal_entry_ends_the_game_with_a_bonus() {
    let mut st = DoorState {
        positions: [(2, 1), (8, 1)],
        reached_goal: false,
    };
    let mut events = Vec::new();
    let mut rewards = [0.0; 2];
    st.apply(0, Action::Left, 1, &mut events, &mut rewards);
    st.apply(0, Action::Left, 1, &mut events, &mut rewards);
    assert!(st.reached_goal);

    // The wrong goal cell does not end anything.
    let mut st = DoorState {
        positions: [(1, 2), (8, 2)],
        reached_goal: false,
    };
    events.clear();
    st.apply(0, Action::Left, 4, &mut events, &mut rewards);
    assert_eq!(st.positions[0], (0, 2));
    assert!(events.is_empty());
    assert!(!st.reached_goal);
}

fn step_toward(from: (usize, usize), to: (usize, usize)) -> Action {
    if from.0 < to.0 {
        Action::Right
    } else if from.0 > to.0 {
        Action::Left
    } else if from.1 < to.1 {
        Action::Down
    } else if from.1 > to.1 {
        Action::Up
    } else {
        Action::Pass
    }
}

#[test]
fn door_cooperation_pays_both_players() {
    let goal = 2;
    let mut success = false;
    'seeds: for seed in 0..200u64 {
        let mut st = GameState::reset(&GameSpec::Door, seed, GoalAssignment::Fixed([goal, goal]));
        while !st.is_over() {
            let actor = st.acting_agent();
            let me = st.agent_position(actor);
            let action = if actor == 1 {
                // Walk to the switch and hold it.
                step_toward(me, (8, goal))
            } else if me.0 > 2 || me.1 != goal {
                // Line up in front of the door, off the door column.
                step_toward(me, (2, goal))
            } else if st.agent_position(1) == (8, goal) {
                Action::Left
            } else {
                Action::Pass
            };
            let out = st.step(actor, action).unwrap();
            if out.events.contains(&Event::GoalReached) {
                assert!(out.done);
                assert!((out.rewards[0] - (GOAL_BONUS - STEP_COST)).abs() < 1e-12);
                assert_eq!(out.rewards[1], GOAL_BONUS);
                assert!(st.won(0) && st.won(1));
                success = true;
                break 'seeds;
            }
        }
    }
    assert!(success, "no seed within 200 allowed the scripted handshake");
}

#[test]
fn door_actions_cost_a_tenth_each() {
    let mut st = GameState::reset(&GameSpec::Door, 21, GoalAssignment::Fixed([0, 4]));
    let mut totals = [0.0; 2];
    let mut acted = [0usize; 2];
    while !st.is_over() {
        let actor = st.acting_agent();
        let out = st.step(actor, Action::Pass).unwrap();
        acted[actor] += 1;
        totals[0] += out.rewards[0];
        totals[1] += out.rewards[1];
    }
    assert_eq!(acted[0] + acted[1], 22);
    for p in 0..2 {
        let mut expect = 0.0;
        for _ in 0..acted[p] {
            expect += -STEP_COST;
        }
        assert_eq!(totals[p], expect);
    }
    assert!(!st.won(0) && !st.won(1));
}

#[test]
fn unsupported_actions_are_rejected() {
    let mut st = GameState::reset(&GameSpec::coin_default(), 1, GoalAssignment::Standard);
    let err = st.step(st.acting_agent(), Action::Pick).unwrap_err();
    assert!(matches!(err, EnvError::UnsupportedAction { .. }));
    assert_eq!(st.steps_taken(), 0);

    let mut st = GameState::reset(&GameSpec::Recipe, 1, GoalAssignment::Standard);
    st.step(st.acting_agent(), Action::Pick).unwrap();
}

fn planes(obs: &Observation, spec: &GameSpec) -> Vec<Vec<f64>> {
    let (w, h) = spec.grid();
    let area = w * h;
    obs.features
        .data()
        .chunks(area)
        .map(|c| c.to_vec())
        .collect()
}

#[test]
fn observations_swap_only_the_agent_planes() {
    for spec in all_specs() {
        let self_plane = match spec {
            GameSpec::Coin(_) => 3,
            GameSpec::Recipe => 4,
            GameSpec::Door => 15,
        };
        for seed in 0..10 {
            let st = GameState::reset(&spec, seed, GoalAssignment::Standard);
            let a = planes(&st.observe(0), &spec);
            let b = planes(&st.observe(1), &spec);
            assert_eq!(a.len(), spec.nplanes());
            for p in 0..a.len() {
                if p == self_plane {
                    assert_eq!(a[p], b[p + 1], "self plane of 0 is other plane of 1");
                    assert_eq!(b[p], a[p + 1]);
                } else if p != self_plane + 1 {
                    assert_eq!(a[p], b[p], "plane {p} should not depend on perspective");
                }
                let sum: f64 = a[p].iter().sum();
                if p == self_plane || p == self_plane + 1 {
                    assert_eq!(sum, 1.0, "agent planes are one-hot");
                }
                assert!(a[p].iter().all(|&v| v == 0.0 || v == 1.0));
            }
        }
    }
}

#[test]
fn spare_planes_stay_zero() {
    let spares: [(GameSpec, Vec<usize>); 3] = [
        (GameSpec::coin_default(), vec![5]),
        (GameSpec::Recipe, vec![6, 7]),
        (GameSpec::Door, vec![17, 18, 19]),
    ];
    for (spec, idxs) in spares {
        let st = GameState::reset(&spec, 5, GoalAssignment::Standard);
        let p = planes(&st.observe(0), &spec);
        for i in idxs {
            assert!(p[i].iter().all(|&v| v == 0.0), "{} plane {i}", spec.name());
        }
    }
}

#[test]
fn goals_are_invisible_in_observations() {
    let cases = [
        (GameSpec::coin_default(), [0, 1], [2, 1]),
        (GameSpec::Recipe, [0, 1], [2, 3]),
        (GameSpec::Door, [0, 0], [4, 2]),
    ];
    for (spec, ga, gb) in cases {
        let sa = GameState::reset(&spec, 17, GoalAssignment::Fixed(ga));
        let sb = GameState::reset(&spec, 17, GoalAssignment::Fixed(gb));
        for p in 0..2 {
            assert_eq!(
                sa.observe(p).features.data(),
                sb.observe(p).features.data(),
                "{}: goal assignment leaked into the observation",
                spec.name()
            );
        }
    }
}

#[test]
fn first_actor_depends_on_seed() {
    let spec = GameSpec::coin_default();
    let mut seen = [false; 2];
    for seed in 0..64 {
        seen[GameState::reset(&spec, seed, GoalAssignment::Standard).first_actor()] = true;
    }
    assert_eq!(seen, [true, true]);
}

fn record_random_episode(spec: &GameSpec, seed: u64) -> EpisodeReplay {
    let mut st = GameState::reset(spec, seed, GoalAssignment::Standard);
    let mut replay = EpisodeReplay::begin(&st, seed, GoalAssignment::Standard);
    let mut rng = crate::rng::stream(seed.wrapping_mul(31) ^ 0xabcd);
    while !st.is_over() {
        let actor = st.acting_agent();
        let action = random_action(&st, &mut rng);
        let out = st.step(actor, action).unwrap();
        replay.push(actor, action, &out.events, out.rewards);
    }
    replay
}

#[test]
fn replays_round_trip_bit_exactly() {
    for spec in all_specs() {
        for seed in 0..5 {
            let replay = record_random_episode(&spec, seed);
            let text = replay.to_text();
            let parsed = EpisodeReplay::parse(&text).unwrap();
            assert_eq!(parsed, replay);
            for p in 0..2 {
                assert_eq!(parsed.rewards[p].to_bits(), replay.rewards[p].to_bits());
            }
            assert_eq!(parsed.to_text(), text);
            replay.verify().unwrap();
        }
    }
}

#[test]
fn replay_verification_catches_tampering() {
    let replay = record_random_episode(&GameSpec::coin_default(), 9);

    let mut bad = replay.clone();
    bad.rewards[0] += 1.0;
    assert!(bad.verify().is_err());

    let mut bad = replay.clone();
    bad.steps.pop();
    assert!(bad.verify().is_err());

    // Standard coin goals are distinct, so swapping them must show up.
    let mut bad = replay.clone();
    bad.goals.swap(0, 1);
    assert!(bad.verify().is_err());

    let mut bad = replay.clone();
    bad.seed ^= 1;
    assert!(bad.verify().is_err());
}

#[test]
fn replay_parse_errors_name_the_line() {
    let replay = record_random_episode(&GameSpec::Recipe, 2);
    let text = replay.to_text();

    // Corrupt the action name on the first step line (line 7).
    let mut lines: Vec<&str> = text.lines().collect();
    let step_line = lines[6].to_owned();
    let broken = step_line.replace(
        step_line.split_whitespace().nth(2).unwrap(),
        "teleport",
    );
    lines[6] = &broken;
    let err = EpisodeReplay::parse(&lines.join("\n")).unwrap_err();
    match err {
        ReplayError::Parse { line, .. } => assert_eq!(line, 7),
        other => panic!("expected a parse error, got {other}"),
    }

    let err = EpisodeReplay::parse("som-replay v1\ngame recipe\n").unwrap_err();
    assert!(matches!(err, ReplayError::Parse { .. }));

    let with_junk = format!("{text}hello\n");
    assert!(EpisodeReplay::parse(&with_junk).is_err());
}

#[test]
fn feature_sizes_match_the_specs() {
    for spec in all_specs() {
        let st = GameState::reset(&spec, 0, GoalAssignment::Standard);
        assert_eq!(st.observe(0).features.len(), spec.nfeatures());
    }
    assert_eq!(GameSpec::coin_default().nfeatures(), 384);
    assert_eq!(GameSpec::Recipe.nfeatures(), 192);
    assert_eq!(GameSpec::Door.nfeatures(), 900);
    assert_eq!(GameSpec::coin_default().nactions(), 5);
    assert_eq!(GameSpec::Recipe.nactions(), 6);
    assert_eq!(GameSpec::Door.nactions(), 5);
}
