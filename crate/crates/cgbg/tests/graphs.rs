//! Cross-checks between the two factor-graph encodings and direct policy
//! evaluation.

mod common;

use cgbg::domains::gen_random_cgbg;
use cgbg::game::JointPolicy;
use cgbg::rng::stream_rng;
use cgbg::{build_ai_fg, build_ati_fg};
use common::{all_policies, assert_close, oracle_value, seeded_game};
use rand::Rng;

#[test]
fn evaluate_policy_matches_the_independent_oracle() {
    // Includes the 3-agent chain with scopes {0,1}, {1,2}.
    let games = [
        seeded_game(&[2, 2, 2], &[2, 2, 2], &[&[0, 1], &[1, 2]], 4),
        seeded_game(&[3, 2], &[2, 3], &[&[0, 1]], 5),
        gen_random_cgbg(4, 2, 3, 2, 6).unwrap(),
        gen_random_cgbg(4, 3, 2, 2, 7).unwrap(),
    ];
    for (g, game) in games.iter().enumerate() {
        let mut rng = stream_rng(g as u64, 0);
        for _ in 0..50 {
            let policy = JointPolicy::random(game, &mut rng);
            let value = game.evaluate_policy(&policy).unwrap();
            assert_close(value, oracle_value(game, &policy), 1e-9, &format!("game {g}"));
        }
    }
}

#[test]
fn local_value_matches_a_direct_enumeration() {
    // A seeded two-agent component, checked against the oracle on the
    // single-component game.
    let game = seeded_game(&[2, 2], &[2, 2], &[&[0, 1]], 11);
    for policy in all_policies(&game) {
        let local = game
            .local_value(0, &[policy.agent(0).to_vec(), policy.agent(1).to_vec()])
            .unwrap();
        assert_close(local, oracle_value(&game, &policy), 1e-9, "local vs oracle");
    }
}

/// Exhaustively sweeps every assignment of both graph encodings of a game
/// and checks value preservation and the decode/encode bijection.
fn exhaustive_equivalence(game: &cgbg::Game, context: &str) {
    let (ati, ati_index) = build_ati_fg(game);
    let (ai, ai_index) = build_ai_fg(game).unwrap();

    // ATI sweep: the factor order reproduces the evaluation order, so the
    // sums agree bit for bit.
    let sizes: Vec<usize> = ati.variables().iter().map(|v| v.domain).collect();
    let mut assignment = vec![0usize; sizes.len()];
    loop {
        let policy = ati_index.decode(&assignment).unwrap();
        let graph_value = ati.evaluate_assignment(&assignment).unwrap();
        let policy_value = game.evaluate_policy(&policy).unwrap();
        assert_eq!(
            graph_value.to_bits(),
            policy_value.to_bits(),
            "{context}: ATI sum differs at {assignment:?}"
        );
        assert_eq!(ati_index.encode(&policy).unwrap(), assignment, "{context}");
        if !cgbg::index::next_tuple(&sizes, &mut assignment) {
            break;
        }
    }

    // AI sweep: factor entries are per-component sub-sums, so agreement is
    // up to rounding.
    let sizes: Vec<usize> = ai.variables().iter().map(|v| v.domain).collect();
    let mut assignment = vec![0usize; sizes.len()];
    loop {
        let policy = ai_index.decode(&assignment).unwrap();
        let graph_value = ai.evaluate_assignment(&assignment).unwrap();
        let policy_value = game.evaluate_policy(&policy).unwrap();
        assert_close(graph_value, policy_value, 1e-9, context);
        assert_eq!(ai_index.encode(&policy).unwrap(), assignment, "{context}");
        if !cgbg::index::next_tuple(&sizes, &mut assignment) {
            break;
        }
    }
}

#[test]
fn both_encodings_preserve_values_exhaustively() {
    // 16 joint policies: the 2-agent, 2-type, 2-action game.
    exhaustive_equivalence(&seeded_game(&[2, 2], &[2, 2], &[&[0, 1]], 21), "2-agent");
    // The 3-agent chain shape.
    exhaustive_equivalence(
        &seeded_game(&[2, 2, 2], &[2, 2, 2], &[&[0, 1], &[1, 2]], 22),
        "3-agent chain",
    );
    // Mixed sizes.
    exhaustive_equivalence(&seeded_game(&[3, 2], &[2, 3], &[&[0, 1]], 23), "mixed");
}

#[test]
fn larger_games_preserve_values_on_sampled_assignments() {
    for seed in 0..5u64 {
        let game = gen_random_cgbg(5, 2, 3, 3, seed).unwrap();
        let (ati, ati_index) = build_ati_fg(&game);
        let (ai, ai_index) = build_ai_fg(&game).unwrap();
        let mut rng = stream_rng(seed, 42);
        for _ in 0..40 {
            let policy = JointPolicy::random(&game, &mut rng);
            let value = game.evaluate_policy(&policy).unwrap();
            let ati_assignment = ati_index.encode(&policy).unwrap();
            assert_eq!(
                ati.evaluate_assignment(&ati_assignment).unwrap().to_bits(),
                value.to_bits()
            );
            let ai_assignment = ai_index.encode(&policy).unwrap();
            assert_close(
                ai.evaluate_assignment(&ai_assignment).unwrap(),
                value,
                1e-9,
                "AI sampled",
            );
        }
    }
}

#[test]
fn structure_counts_follow_the_formulas() {
    for seed in 0..10u64 {
        let game = gen_random_cgbg(5, 2, 2, 3, seed).unwrap();
        let (ati, _) = build_ati_fg(&game);
        let (ai, _) = build_ai_fg(&game).unwrap();

        let expected_vars: usize = game.type_sizes().iter().sum();
        let expected_factors: usize = (0..game.components().len())
            .map(|e| game.local_type_count(e))
            .sum();
        let expected_edges: usize = game
            .components()
            .iter()
            .enumerate()
            .map(|(e, c)| c.scope.len() * game.local_type_count(e))
            .sum();
        assert_eq!(ati.n_variables(), expected_vars);
        assert_eq!(ati.n_factors(), expected_factors);
        assert_eq!(ati.edge_count(), expected_edges);

        assert_eq!(ai.n_variables(), game.n_agents());
        assert_eq!(ai.n_factors(), game.components().len());
    }
}

#[test]
fn ai_factor_tables_hold_local_values() {
    let game = seeded_game(&[2, 3], &[2, 2], &[&[0, 1]], 31);
    let (ai, ai_index) = build_ai_fg(&game).unwrap();
    let factor = &ai.factors()[0];
    for (flat, &entry) in factor.table.iter().enumerate() {
        let mut digits = vec![0usize; 2];
        let sizes: Vec<usize> = factor
            .neighbors
            .iter()
            .map(|&v| ai.variables()[v].domain)
            .collect();
        cgbg::index::delinearize(&sizes, flat, &mut digits);
        let local_policy: Vec<Vec<usize>> = factor
            .neighbors
            .iter()
            .zip(&digits)
            .map(|(&agent, &p)| ai_index.decode_agent(agent, p))
            .collect();
        assert_eq!(entry, game.local_value(0, &local_policy).unwrap());
    }
}

#[test]
fn ati_variables_touch_only_matching_joint_types() {
    for seed in 0..5u64 {
        let game = gen_random_cgbg(4, 2, 2, 3, seed).unwrap();
        let (ati, index) = build_ati_fg(&game);
        for (f, factor) in ati.factors().iter().enumerate() {
            let (e, theta_lin) = index.factor_of(f);
            let comp = &game.components()[e];
            let mut theta = vec![0usize; comp.scope.len()];
            cgbg::index::delinearize(game.scope_type_sizes(e), theta_lin, &mut theta);
            for (pos, &v) in factor.neighbors.iter().enumerate() {
                let (agent, type_index) = index.variable_of(v);
                assert_eq!(agent, comp.scope[pos]);
                assert_eq!(type_index, theta[pos]);
            }
        }
    }
}

#[test]
fn random_policy_survives_an_encode_decode_round_trip() {
    let game = gen_random_cgbg(4, 2, 3, 3, 77).unwrap();
    let (_, ati_index) = build_ati_fg(&game);
    let (_, ai_index) = build_ai_fg(&game).unwrap();
    let mut rng = stream_rng(77, 1);
    for _ in 0..100 {
        let policy = JointPolicy::random(&game, &mut rng);
        assert_eq!(
            ati_index.decode(&ati_index.encode(&policy).unwrap()).unwrap(),
            policy
        );
        assert_eq!(
            ai_index.decode(&ai_index.encode(&policy).unwrap()).unwrap(),
            policy
        );
    }
    // And the reverse direction on random assignments.
    for _ in 0..100 {
        let assignment: Vec<usize> = (0..game.n_agents())
            .flat_map(|i| {
                (0..game.type_size(i))
                    .map(|_| rng.random_range(0..game.action_size(i)))
                    .collect::<Vec<_>>()
            })
            .collect();
        let decoded = ati_index.decode(&assignment).unwrap();
        assert_eq!(ati_index.encode(&decoded).unwrap(), assignment);
    }
}
