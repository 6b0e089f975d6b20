//! Baseline solvers: exhaustive search, alternating maximization, and
//! cross-entropy optimization.
//!
//! [`brute_force`] enumerates every joint policy and is the exactness oracle
//! for the rest of the workspace. The other two are the classic approximate
//! baselines: hill climbing by per-agent best responses, and a sampled
//! distribution over policies re-fit to its elite each iteration.

use std::time::{Duration, Instant};

use rand::Rng;
use thiserror::Error;

use crate::game::{Game, GameError, JointPolicy};
use crate::index;
use crate::rng::stream_rng;

/// Default cap on the number of joint policies brute force will enumerate.
pub const DEFAULT_POLICY_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("{count} joint policies exceed the enumeration cap of {cap}")]
    PolicyCountExceedsCap { count: u128, cap: u128 },
    #[error("the joint-policy count overflows u128")]
    PolicyCountOverflow,
    #[error("time limit hit during exhaustive enumeration")]
    TimeLimit,
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Exact argmax of the policy value by full enumeration, under the default
/// cap of [`DEFAULT_POLICY_CAP`] joint policies.
///
/// Policies are visited in ascending lexicographic order (agent-major,
/// type-minor, action index), and only strict improvements replace the
/// incumbent, so ties resolve to the lexicographically smallest optimum.
pub fn brute_force(game: &Game) -> Result<(JointPolicy, f64), BaselineError> {
    brute_force_with_cap(game, DEFAULT_POLICY_CAP, None)
}

pub fn brute_force_with_cap(
    game: &Game,
    cap: u128,
    time_limit: Option<Duration>,
) -> Result<(JointPolicy, f64), BaselineError> {
    let count = game
        .joint_policy_count()
        .ok_or(BaselineError::PolicyCountOverflow)?;
    if count > cap {
        return Err(BaselineError::PolicyCountExceedsCap { count, cap });
    }
    let deadline = time_limit.map(|limit| Instant::now() + limit);

    // One digit per (agent, type), agent-major, type-minor; the radix of a
    // digit is the owning agent's action count.
    let mut sizes = Vec::new();
    let mut offsets = vec![0usize; game.n_agents() + 1];
    for agent in 0..game.n_agents() {
        sizes.extend(std::iter::repeat_n(game.action_size(agent), game.type_size(agent)));
        offsets[agent + 1] = sizes.len();
    }

    let mut digits = vec![0usize; sizes.len()];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_digits = digits.clone();
    let mut visited: u64 = 0;
    loop {
        let candidate = JointPolicy::new(
            (0..game.n_agents())
                .map(|agent| digits[offsets[agent]..offsets[agent + 1]].to_vec())
                .collect(),
        );
        let value = game.evaluate_unchecked(&candidate);
        if value > best_value {
            best_value = value;
            best_digits = digits.clone();
        }
        visited += 1;
        if visited & 0x3FF == 0 {
            if let Some(d) = deadline {
                if Instant::now() > d {
                    return Err(BaselineError::TimeLimit);
                }
            }
        }
        if !index::next_tuple(&sizes, &mut digits) {
            break;
        }
    }

    let best = JointPolicy::new(
        (0..game.n_agents())
            .map(|agent| best_digits[offsets[agent]..offsets[agent + 1]].to_vec())
            .collect(),
    );
    let value = game.evaluate_policy(&best)?;
    debug_assert_eq!(value.to_bits(), best_value.to_bits());
    Ok((best, value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltMaxResult {
    pub policy: JointPolicy,
    pub value: f64,
    /// Sweeps performed, including the final one that changed nothing.
    pub rounds: usize,
}

/// Alternating maximization: from a seeded uniform-random joint policy,
/// sweeps the agents in index order replacing each policy with its best
/// response, until a full sweep changes nothing or `max_rounds` is reached.
/// The value never decreases along the way.
pub fn alt_max(game: &Game, seed: u64, max_rounds: usize) -> AltMaxResult {
    alt_max_limited(game, seed, max_rounds, None).0
}

/// Time-limited variant; the flag reports whether the budget cut the climb
/// short. The policy returned is still the best seen (the climb is monotone).
pub fn alt_max_limited(
    game: &Game,
    seed: u64,
    max_rounds: usize,
    time_limit: Option<Duration>,
) -> (AltMaxResult, bool) {
    let deadline = time_limit.map(|limit| Instant::now() + limit);
    let mut rng = stream_rng(seed, 0);
    let mut policy = JointPolicy::random(game, &mut rng);
    let mut rounds = 0usize;
    let mut exceeded = false;
    while rounds < max_rounds {
        if let Some(d) = deadline {
            if Instant::now() > d {
                exceeded = true;
                break;
            }
        }
        rounds += 1;
        let mut changed = false;
        for agent in 0..game.n_agents() {
            let response = game
                .best_response(&policy, agent)
                .expect("policy stays well-shaped");
            if response != policy.agent(agent) {
                policy.set_agent(agent, response);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let value = game.evaluate_policy(&policy).expect("well-shaped policy");
    (
        AltMaxResult {
            policy,
            value,
            rounds,
        },
        exceeded,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeConfig {
    /// Policies sampled per iteration.
    pub population: usize,
    /// Fraction of the population kept as the elite set (at least one).
    pub elite_fraction: f64,
    /// Blend factor: `new = smoothing * empirical + (1 - smoothing) * old`.
    pub smoothing: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            population: 100,
            elite_fraction: 0.1,
            smoothing: 0.3,
            iterations: 50,
            seed: 0,
        }
    }
}

/// Cross-entropy optimization over joint policies.
///
/// Maintains an independent categorical distribution over actions per
/// (agent, type), initialized uniform. Each iteration samples the
/// population, evaluates every policy exactly, re-fits each categorical to
/// the elite's empirical action frequencies, and blends it into the old
/// distribution. Returns the best policy ever sampled.
pub fn cross_entropy(game: &Game, config: &CeConfig) -> (JointPolicy, f64) {
    cross_entropy_limited(game, config, None).0
}

pub fn cross_entropy_limited(
    game: &Game,
    config: &CeConfig,
    time_limit: Option<Duration>,
) -> ((JointPolicy, f64), bool) {
    let deadline = time_limit.map(|limit| Instant::now() + limit);
    let mut rng = stream_rng(config.seed, 0);
    let n = game.n_agents();
    let mut dist: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            vec![vec![1.0 / game.action_size(i) as f64; game.action_size(i)]; game.type_size(i)]
        })
        .collect();
    let elite_count = ((config.population as f64 * config.elite_fraction).floor() as usize).max(1);

    let mut best: Option<(f64, JointPolicy)> = None;
    let mut exceeded = false;
    for _ in 0..config.iterations {
        if let Some(d) = deadline {
            if Instant::now() > d {
                exceeded = true;
                break;
            }
        }
        // Sample the population: member-major, agent-major, type-minor.
        let mut scored: Vec<(f64, JointPolicy)> = Vec::with_capacity(config.population);
        for _ in 0..config.population {
            let policy = JointPolicy::new(
                (0..n)
                    .map(|i| {
                        (0..game.type_size(i))
                            .map(|t| sample_categorical(&dist[i][t], &mut rng))
                            .collect()
                    })
                    .collect(),
            );
            let value = game.evaluate_unchecked(&policy);
            scored.push((value, policy));
        }
        for (value, policy) in &scored {
            if best.as_ref().is_none_or(|(b, _)| value > b) {
                best = Some((*value, policy.clone()));
            }
        }
        // Elite: highest values, stable on ties.
        let mut order: Vec<usize> = (0..scored.len()).collect();
        order.sort_by(|&a, &b| scored[b].0.partial_cmp(&scored[a].0).unwrap());
        let elite: Vec<&JointPolicy> = order[..elite_count].iter().map(|&i| &scored[i].1).collect();

        for agent in 0..n {
            for t in 0..game.type_size(agent) {
                let mut empirical = vec![0.0f64; game.action_size(agent)];
                for policy in &elite {
                    empirical[policy.action(agent, t)] += 1.0;
                }
                for (slot, count) in dist[agent][t].iter_mut().zip(&empirical) {
                    *slot = config.smoothing * (count / elite_count as f64)
                        + (1.0 - config.smoothing) * *slot;
                }
            }
        }
    }

    let (value, policy) = match best {
        Some((v, p)) => (v, p),
        // Zero-iteration budgets and instantly-expired deadlines still
        // return something well-formed.
        None => {
            let p = JointPolicy::all_zero(game);
            (game.evaluate_unchecked(&p), p)
        }
    };
    ((policy, value), exceeded)
}

/// Inverse-CDF draw from a categorical distribution; the final index absorbs
/// any rounding slack.
fn sample_categorical<R: Rng>(probabilities: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probabilities.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::gen_random_cgbg;
    use crate::game::PayoffComponent;

    fn bandit(payoffs: Vec<f64>) -> Game {
        let n_actions = payoffs.len();
        Game::new(
            vec![n_actions],
            vec![1],
            vec![PayoffComponent {
                scope: vec![0],
                local_type_prob: vec![1.0],
                payoff: payoffs,
            }],
        )
        .unwrap()
    }

    #[test]
    fn brute_force_picks_the_single_best_action() {
        let game = bandit(vec![1.0, 9.0, 4.0]);
        let (policy, value) = brute_force(&game).unwrap();
        assert_eq!(policy.agent(0), &[1]);
        assert_eq!(value, 9.0);
    }

    #[test]
    fn brute_force_breaks_ties_lexicographically() {
        // All payoffs zero: every policy is optimal, the all-zero one wins.
        let game = Game::new(
            vec![2, 2],
            vec![2, 2],
            vec![PayoffComponent {
                scope: vec![0, 1],
                local_type_prob: vec![0.25; 4],
                payoff: vec![0.0; 16],
            }],
        )
        .unwrap();
        let (policy, value) = brute_force(&game).unwrap();
        assert_eq!(policy, JointPolicy::all_zero(&game));
        assert_eq!(value, 0.0);
    }

    #[test]
    fn brute_force_cap_is_a_capacity_error() {
        let game = gen_random_cgbg(3, 2, 2, 2, 0).unwrap();
        let err = brute_force_with_cap(&game, 8, None).unwrap_err();
        assert_eq!(
            err,
            BaselineError::PolicyCountExceedsCap { count: 64, cap: 8 }
        );
    }

    #[test]
    fn alt_max_finds_the_optimum_of_a_single_agent_game() {
        let game = bandit(vec![0.5, -1.0, 3.0, 2.0]);
        let result = alt_max(&game, 0, 100);
        assert_eq!(result.value, 3.0);
        assert!(result.rounds <= 2);
    }

    #[test]
    fn alt_max_ends_at_a_best_response_fixed_point() {
        for seed in 0..10 {
            let game = gen_random_cgbg(4, 2, 3, 2, seed).unwrap();
            let result = alt_max(&game, seed, 100);
            for agent in 0..game.n_agents() {
                assert_eq!(
                    game.best_response(&result.policy, agent).unwrap(),
                    result.policy.agent(agent),
                    "seed {seed} agent {agent}"
                );
            }
            assert_eq!(
                result.value,
                game.evaluate_policy(&result.policy).unwrap()
            );
        }
    }

    #[test]
    fn alt_max_is_deterministic() {
        let game = gen_random_cgbg(5, 2, 3, 3, 8).unwrap();
        assert_eq!(alt_max(&game, 42, 100), alt_max(&game, 42, 100));
    }

    #[test]
    fn cross_entropy_solves_a_bandit_with_defaults() {
        let game = bandit(vec![-0.2, 0.9, 0.1]);
        let (policy, value) = cross_entropy(&game, &CeConfig::default());
        assert_eq!(policy.agent(0), &[1]);
        assert_eq!(value, 0.9);
    }

    #[test]
    fn cross_entropy_best_is_monotone_in_the_iteration_budget() {
        let game = gen_random_cgbg(4, 2, 3, 2, 17).unwrap();
        let mut last = f64::NEG_INFINITY;
        for iterations in [1, 2, 5, 10, 25, 50] {
            let (_, value) = cross_entropy(
                &game,
                &CeConfig {
                    iterations,
                    ..Default::default()
                },
            );
            assert!(value >= last);
            last = value;
        }
    }

    #[test]
    fn cross_entropy_is_deterministic_and_bounded_by_the_oracle() {
        let game = gen_random_cgbg(4, 2, 2, 2, 3).unwrap();
        let (_, optimum) = brute_force(&game).unwrap();
        let a = cross_entropy(&game, &CeConfig::default());
        let b = cross_entropy(&game, &CeConfig::default());
        assert_eq!(a, b);
        assert!(a.1 <= optimum + 1e-12);
    }
}
