//! Randomized whole-episode invariants for the three games.

use proptest::prelude::*;
use som_core::envs::{
    Action, CoinConfig, EpisodeReplay, GameSpec, GameState, GoalAssignment, NCOLORS,
};

fn any_spec() -> impl Strategy<Value = GameSpec> {
    prop_oneof![
        Just(GameSpec::coin_default()),
        Just(GameSpec::Recipe),
        Just(GameSpec::Door),
        (4usize..10, 4usize..10, 1usize..5).prop_map(|(width, height, coins_per_color)| {
            GameSpec::Coin(CoinConfig {
                width,
                height,
                coins_per_color,
            })
        }),
    ]
}

fn pick(actions: &[Action], raw: usize) -> Action {
    actions[raw % actions.len()]
}

proptest! {
    #[test]
    fn episodes_respect_the_rules(
        spec in any_spec(),
        seed in 0u64..1_000_000,
        raw_actions in proptest::collection::vec(0usize..64, 60),
    ) {
        let mut st = GameState::reset(&spec, seed, GoalAssignment::Standard);
        let initial_coins: Option<usize> =
            st.coins_remaining().map(|r| r.iter().sum());
        let mut expected_actor = st.first_actor();
        let mut outcomes = 0usize;

        for &raw in &raw_actions {
            if st.is_over() {
                break;
            }
            prop_assert_eq!(st.acting_agent(), expected_actor);

            let obs = st.observe(expected_actor);
            prop_assert_eq!(obs.features.len(), spec.nfeatures());
            prop_assert!(obs.features.data().iter().all(|&v| v == 0.0 || v == 1.0));

            let action = pick(spec.actions(), raw);
            let out = st.step(expected_actor, action).unwrap();
            outcomes += 1;
            prop_assert!(out.rewards.iter().all(|r| r.is_finite()));

            // Coin pays only at the very end.
            if matches!(spec, GameSpec::Coin(_)) && !out.done {
                prop_assert_eq!(out.rewards, [0.0, 0.0]);
            }

            if let Some(total) = initial_coins {
                let collected: usize =
                    st.coin_counts().unwrap().iter().flatten().sum();
                let left: usize = st.coins_remaining().unwrap().iter().sum();
                prop_assert_eq!(collected + left, total);
            }
            if spec == GameSpec::Recipe {
                let held: usize = (0..2)
                    .map(|p| st.inventory(p).unwrap().iter().sum::<usize>())
                    .sum();
                prop_assert_eq!(held + st.item_positions().unwrap().len(), 8);
            }

            prop_assert_eq!(out.done, st.is_over());
            expected_actor = 1 - expected_actor;
        }

        prop_assert!(st.is_over());
        match &spec {
            // Door can end early through a lucky goal entry.
            GameSpec::Door => prop_assert!(outcomes <= spec.total_steps()),
            _ => prop_assert_eq!(outcomes, spec.total_steps()),
        }
    }

    #[test]
    fn recorded_episodes_replay_exactly(
        spec in any_spec(),
        seed in 0u64..1_000_000,
        raw_actions in proptest::collection::vec(0usize..64, 60),
    ) {
        let mut st = GameState::reset(&spec, seed, GoalAssignment::Standard);
        let mut replay = EpisodeReplay::begin(&st, seed, GoalAssignment::Standard);
        for &raw in &raw_actions {
            if st.is_over() {
                break;
            }
            let actor = st.acting_agent();
            let action = pick(spec.actions(), raw);
            let out = st.step(actor, action).unwrap();
            replay.push(actor, action, &out.events, out.rewards);
        }

        let text = replay.to_text();
        let parsed = EpisodeReplay::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &replay);
        prop_assert_eq!(parsed.to_text(), text);
        prop_assert!(replay.verify().is_ok());
    }

    #[test]
    fn coin_goals_are_always_distinct_colors(seed in 0u64..1_000_000) {
        let st = GameState::reset(
            &GameSpec::coin_default(),
            seed,
            GoalAssignment::Standard,
        );
        let [a, b] = st.goals();
        prop_assert!(a < NCOLORS && b < NCOLORS);
        prop_assert_ne!(a, b);
    }
}
