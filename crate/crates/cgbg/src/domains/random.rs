//! Random game generator.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;

use super::DomainError;
use crate::game::{Game, PayoffComponent};
use crate::rng::stream_rng;
use crate::util::UnionFind;

/// Generates a random game with `n_agents` agents, `n_actions` actions and
/// `n_types` types per agent, and scopes of exactly `k` distinct agents.
///
/// Scopes are drawn uniformly at random (duplicates of already-chosen scopes
/// are rejected) from stream 0 of `seed` until the scope hypergraph connects
/// all agents. Component `e`'s tables come from stream `e + 1`: its type
/// probabilities are standard-uniform draws normalized to sum to 1, its
/// payoffs standard-normal draws, both filled in row-major table order.
/// Identical parameters and seed give a bit-identical game on any platform.
pub fn gen_random_cgbg(
    n_agents: usize,
    k: usize,
    n_actions: usize,
    n_types: usize,
    seed: u64,
) -> Result<Game, DomainError> {
    if k == 0 || k > n_agents {
        return Err(DomainError::InvalidScopeSize { k, n_agents });
    }
    if k == 1 && n_agents > 1 {
        // Singleton scopes can never connect two agents.
        return Err(DomainError::InvalidScopeSize { k, n_agents });
    }
    if n_agents == 0 || n_actions == 0 || n_types == 0 {
        return Err(DomainError::InvalidParams(
            "agent, action and type counts must be positive".into(),
        ));
    }

    let mut structure_rng = stream_rng(seed, 0);
    let mut scopes: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut connectivity = UnionFind::new(n_agents);
    while scopes.is_empty() || !connectivity.all_connected() {
        let mut scope = rand::seq::index::sample(&mut structure_rng, n_agents, k).into_vec();
        scope.sort_unstable();
        if !seen.insert(scope.clone()) {
            continue;
        }
        for &agent in &scope[1..] {
            connectivity.union(scope[0], agent);
        }
        scopes.push(scope);
    }

    let mut components = Vec::with_capacity(scopes.len());
    for (e, scope) in scopes.into_iter().enumerate() {
        let mut table_rng = stream_rng(seed, e as u64 + 1);
        let n_local_types = n_types.pow(k as u32);
        let n_local_actions = n_actions.pow(k as u32);
        let mut prob: Vec<f64> = (0..n_local_types)
            .map(|_| table_rng.random::<f64>())
            .collect();
        let sum: f64 = prob.iter().sum();
        if sum > 0.0 {
            for p in &mut prob {
                *p /= sum;
            }
        } else {
            prob.fill(1.0 / n_local_types as f64);
        }
        let payoff: Vec<f64> = (0..n_local_types * n_local_actions)
            .map(|_| table_rng.sample(StandardNormal))
            .collect();
        components.push(PayoffComponent {
            scope,
            local_type_prob: prob,
            payoff,
        });
    }

    Ok(Game::new(
        vec![n_actions; n_agents],
        vec![n_types; n_agents],
        components,
    )?)
}
