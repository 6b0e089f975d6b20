//! Shared helpers for the integration tests.

use cgbg::game::{Game, JointPolicy, PayoffComponent};
use cgbg::rng::stream_rng;
use rand::Rng;
use rand_distr::StandardNormal;

/// Independent value oracle: enumerates every component's local joint types
/// with its own digit and stride arithmetic, separate from the library's
/// indexing helpers and evaluation path.
#[allow(dead_code)]
pub fn oracle_value(game: &Game, policy: &JointPolicy) -> f64 {
    let mut total = 0.0;
    for comp in game.components() {
        let scope = &comp.scope;
        let tsizes: Vec<usize> = scope.iter().map(|&i| game.type_size(i)).collect();
        let asizes: Vec<usize> = scope.iter().map(|&i| game.action_size(i)).collect();
        let n_types: usize = tsizes.iter().product();
        let n_actions: usize = asizes.iter().product();
        for t in 0..n_types {
            let mut rest = t;
            let mut types = vec![0usize; scope.len()];
            for pos in (0..scope.len()).rev() {
                types[pos] = rest % tsizes[pos];
                rest /= tsizes[pos];
            }
            let mut action_index = 0usize;
            let mut stride = 1usize;
            for pos in (0..scope.len()).rev() {
                action_index += policy.action(scope[pos], types[pos]) * stride;
                stride *= asizes[pos];
            }
            total += comp.local_type_prob[t] * comp.payoff[t * n_actions + action_index];
        }
    }
    total
}

/// Builds a game with the given scopes and seeded random tables, mirroring
/// the random generator's per-component streams but with arbitrary shapes.
#[allow(dead_code)]
pub fn seeded_game(
    action_sizes: &[usize],
    type_sizes: &[usize],
    scopes: &[&[usize]],
    seed: u64,
) -> Game {
    let components = scopes
        .iter()
        .enumerate()
        .map(|(e, scope)| {
            let mut rng = stream_rng(seed, e as u64 + 1);
            let n_types: usize = scope.iter().map(|&i| type_sizes[i]).product();
            let n_actions: usize = scope.iter().map(|&i| action_sizes[i]).product();
            let mut prob: Vec<f64> = (0..n_types).map(|_| rng.random::<f64>()).collect();
            let sum: f64 = prob.iter().sum();
            for p in &mut prob {
                *p /= sum;
            }
            let payoff: Vec<f64> = (0..n_types * n_actions)
                .map(|_| rng.sample(StandardNormal))
                .collect();
            PayoffComponent {
                scope: scope.to_vec(),
                local_type_prob: prob,
                payoff,
            }
        })
        .collect();
    Game::new(action_sizes.to_vec(), type_sizes.to_vec(), components).unwrap()
}

/// Every joint policy of a small game, in lexicographic order.
#[allow(dead_code)]
pub fn all_policies(game: &Game) -> Vec<JointPolicy> {
    let mut sizes = Vec::new();
    for agent in 0..game.n_agents() {
        sizes.extend(std::iter::repeat_n(game.action_size(agent), game.type_size(agent)));
    }
    let mut digits = vec![0usize; sizes.len()];
    let mut out = Vec::new();
    loop {
        let mut per_agent = Vec::with_capacity(game.n_agents());
        let mut cursor = 0;
        for agent in 0..game.n_agents() {
            let t = game.type_size(agent);
            per_agent.push(digits[cursor..cursor + t].to_vec());
            cursor += t;
        }
        out.push(JointPolicy::new(per_agent));
        if !cgbg::index::next_tuple(&sizes, &mut digits) {
            break;
        }
    }
    out
}

#[allow(dead_code)]
pub fn assert_close(a: f64, b: f64, tolerance: f64, context: &str) {
    assert!(
        cgbg::rel_diff(a, b) <= tolerance,
        "{context}: {a} vs {b} (rel diff {})",
        cgbg::rel_diff(a, b)
    );
}
