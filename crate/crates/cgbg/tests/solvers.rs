//! Solver agreement checks against the exhaustive oracle.

mod common;

use cgbg::baselines::{alt_max, brute_force, cross_entropy, CeConfig};
use cgbg::domains::gen_random_cgbg;
use cgbg::game::JointPolicy;
use cgbg::maxsum::{game_cost_params, message_cost_report, run_maxsum, MaxSumConfig};
use cgbg::ndp::{elimination_order, solve_ndp, OrderingHeuristic};
use cgbg::rng::stream_rng;
use cgbg::{build_ai_fg, build_ati_fg, rel_diff};
use common::assert_close;

/// Small seeded games in the oracle-checkable range.
fn oracle_games(count: usize, base_seed: u64) -> Vec<cgbg::Game> {
    (0..count as u64)
        .map(|i| {
            let n = [2, 3, 4][(i % 3) as usize];
            let actions = [2, 3][(i / 3 % 2) as usize];
            let types = [2, 3][(i / 6 % 2) as usize];
            gen_random_cgbg(n, 2, actions, types, base_seed + i).unwrap()
        })
        .collect()
}

#[test]
fn ndp_matches_brute_force_on_both_encodings() {
    for (i, game) in oracle_games(100, 500).iter().enumerate() {
        let (_, optimum) = brute_force(game).unwrap();

        let (ati, ati_index) = build_ati_fg(game);
        let order = elimination_order(&ati, &OrderingHeuristic::MinFill);
        let result = solve_ndp(&ati, &order).unwrap();
        assert_close(result.value, optimum, 1e-9, &format!("ATI game {i}"));
        // The reported value is the exact evaluation of the decoded policy.
        let decoded = ati_index.decode(&result.assignment).unwrap();
        assert_eq!(
            game.evaluate_policy(&decoded).unwrap().to_bits(),
            result.value.to_bits()
        );

        let (ai, _) = build_ai_fg(game).unwrap();
        let order = elimination_order(&ai, &OrderingHeuristic::MinFill);
        let ai_result = solve_ndp(&ai, &order).unwrap();
        assert_close(ai_result.value, optimum, 1e-9, &format!("AI game {i}"));
        assert!(rel_diff(result.value, ai_result.value) <= 1e-9);
    }
}

#[test]
fn ndp_is_exact_under_every_heuristic_and_given_orders() {
    for seed in 0..10u64 {
        let game = gen_random_cgbg(4, 2, 2, 2, 900 + seed).unwrap();
        let (_, optimum) = brute_force(&game).unwrap();
        let (fg, _) = build_ati_fg(&game);
        let identity: Vec<usize> = (0..fg.n_variables()).collect();
        let reversed: Vec<usize> = identity.iter().rev().copied().collect();
        for order in [
            elimination_order(&fg, &OrderingHeuristic::MinFill),
            elimination_order(&fg, &OrderingHeuristic::MinNeighbors),
            elimination_order(&fg, &OrderingHeuristic::Given(identity)),
            elimination_order(&fg, &OrderingHeuristic::Given(reversed)),
        ] {
            let result = solve_ndp(&fg, &order).unwrap();
            assert_close(result.value, optimum, 1e-9, &format!("seed {seed}"));
        }
    }
}

#[test]
fn induced_width_respects_the_type_count_lower_bound() {
    // For pairwise scopes the width of any ATI ordering is at least the
    // smallest individual type count.
    for seed in 0..20u64 {
        let game = gen_random_cgbg(4, 2, 2, 3, 700 + seed).unwrap();
        let (fg, _) = build_ati_fg(&game);
        for heuristic in [OrderingHeuristic::MinFill, OrderingHeuristic::MinNeighbors] {
            let order = elimination_order(&fg, &heuristic);
            let result = solve_ndp(&fg, &order).unwrap();
            assert!(
                result.induced_width >= 3,
                "seed {seed}: width {} under min type count 3",
                result.induced_width
            );
        }
    }
}

#[test]
fn maxsum_with_restarts_finds_the_optimum_of_small_games() {
    // n = 5 pairwise game with 3 actions and 3 types per agent.
    let game = gen_random_cgbg(5, 2, 3, 3, 1234).unwrap();
    let (_, optimum) = brute_force(&game).unwrap();
    let (fg, index) = build_ati_fg(&game);
    let result = run_maxsum(&fg, &MaxSumConfig::default()).unwrap();
    assert_close(result.value, optimum, 1e-9, "maxsum vs brute");
    let decoded = index.decode(&result.assignment).unwrap();
    assert_eq!(
        game.evaluate_policy(&decoded).unwrap().to_bits(),
        result.value.to_bits()
    );
}

#[test]
fn maxsum_value_is_reproduced_by_policy_evaluation_everywhere() {
    for seed in 0..10u64 {
        let game = gen_random_cgbg(4, 2, 2, 2, 4000 + seed).unwrap();
        let (fg, index) = build_ati_fg(&game);
        for schedule in [
            cgbg::maxsum::Schedule::Parallel,
            cgbg::maxsum::Schedule::SequentialRandom,
        ] {
            let config = MaxSumConfig {
                schedule,
                seed,
                ..Default::default()
            };
            let result = run_maxsum(&fg, &config).unwrap();
            let decoded = index.decode(&result.assignment).unwrap();
            assert_eq!(
                game.evaluate_policy(&decoded).unwrap().to_bits(),
                result.value.to_bits(),
                "seed {seed}"
            );
        }
    }
}

#[test]
fn message_accounting_follows_the_edge_formula() {
    for seed in 0..10u64 {
        let game = gen_random_cgbg(5, 2, 3, 4, 80 + seed).unwrap();
        let (fg, _) = build_ati_fg(&game);
        let report = message_cost_report(&fg);
        let params = game_cost_params(&game);

        let expected_edges: usize = game
            .components()
            .iter()
            .enumerate()
            .map(|(e, c)| c.scope.len() * game.local_type_count(e))
            .sum();
        assert_eq!(report.messages_per_iteration, 2 * expected_edges);

        // Variable degree bound: rho_star * maxTheta^(k - 1).
        let max_types = *game.type_sizes().iter().max().unwrap();
        let bound = params.max_components_per_agent
            * max_types.pow(params.max_scope as u32 - 1);
        assert!(
            report.max_variable_degree <= bound,
            "seed {seed}: degree {} over bound {bound}",
            report.max_variable_degree
        );

        // A run reports exactly the structural message count.
        let result = run_maxsum(
            &fg,
            &MaxSumConfig {
                restarts: 1,
                max_iterations: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(result.messages_per_iteration, 2 * expected_edges);
    }
}

#[test]
fn best_response_to_the_optimal_opponent_recovers_the_optimum() {
    for seed in 0..10u64 {
        let game = gen_random_cgbg(2, 2, 3, 2, 300 + seed).unwrap();
        let (optimal, optimum) = brute_force(&game).unwrap();
        let mut policy = optimal.clone();
        // Scramble agent 0, keep agent 1 optimal, then best-respond.
        policy.set_agent(0, vec![0; game.type_size(0)]);
        let response = game.best_response(&policy, 0).unwrap();
        policy.set_agent(0, response);
        let value = game.evaluate_policy(&policy).unwrap();
        assert_close(value, optimum, 1e-9, &format!("seed {seed}"));
    }
}

#[test]
fn alt_max_is_bounded_and_eventually_near_optimal_over_seeds() {
    let game = gen_random_cgbg(5, 2, 3, 2, 6000).unwrap();
    let (_, optimum) = brute_force(&game).unwrap();
    let mut best = f64::NEG_INFINITY;
    for seed in 0..20u64 {
        let result = alt_max(&game, seed, 100);
        assert!(result.value <= optimum + 1e-9 * optimum.abs().max(1.0));
        best = best.max(result.value);
    }
    assert!(
        best >= 0.95 * optimum,
        "best restart {best} below 0.95 x {optimum}"
    );
}

#[test]
fn alt_max_value_trace_is_monotone() {
    // Replays the sweeps by hand and checks the value after each round.
    for seed in 0..5u64 {
        let game = gen_random_cgbg(4, 2, 3, 3, 250 + seed).unwrap();
        let mut rng = stream_rng(seed, 0);
        let mut policy = JointPolicy::random(&game, &mut rng);
        let mut last = game.evaluate_policy(&policy).unwrap();
        for _ in 0..20 {
            for agent in 0..game.n_agents() {
                policy.set_agent(agent, game.best_response(&policy, agent).unwrap());
            }
            let value = game.evaluate_policy(&policy).unwrap();
            assert!(value >= last - 1e-12, "seed {seed}");
            last = value;
        }
    }
}

#[test]
fn cross_entropy_stays_below_the_oracle_bound() {
    for seed in 0..5u64 {
        let game = gen_random_cgbg(5, 2, 3, 2, 7000 + seed).unwrap();
        let (_, optimum) = brute_force(&game).unwrap();
        let (_, value) = cross_entropy(
            &game,
            &CeConfig {
                seed,
                ..Default::default()
            },
        );
        assert!(value <= optimum + 1e-9 * optimum.abs().max(1.0), "seed {seed}");
    }
}

#[test]
fn every_solver_dominated_by_brute_force_on_small_instances() {
    for seed in 0..10u64 {
        let game = gen_random_cgbg(3, 2, 2, 2, 8800 + seed).unwrap();
        let (_, optimum) = brute_force(&game).unwrap();
        let slack = 1e-9 * optimum.abs().max(1.0);

        let (ati, _) = build_ati_fg(&game);
        let order = elimination_order(&ati, &OrderingHeuristic::MinFill);
        assert!(solve_ndp(&ati, &order).unwrap().value <= optimum + slack);
        assert!(run_maxsum(&ati, &MaxSumConfig::default()).unwrap().value <= optimum + slack);
        assert!(alt_max(&game, seed, 100).value <= optimum + slack);
        assert!(cross_entropy(&game, &CeConfig::default()).1 <= optimum + slack);
    }
}
