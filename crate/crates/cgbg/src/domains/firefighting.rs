//! Firefighting coordination games.
//!
//! `n_agents` agents and `n_houses` houses are placed in the plane. Each
//! house independently catches fire with probability `p_fire`. Each agent
//! observes its `n_observed` nearest houses through a noisy sensor that
//! flips each observation with probability `obs_noise`, and may fight fire
//! at any of its `n_actionable` nearest houses. Sending more fighters to a
//! burning house attenuates the damage geometrically: with `f` fighters the
//! expected penalty for house `h` is
//! `-Pr(h burns | observations) * attenuation^f`.
//!
//! The generated game has one payoff component per house that at least one
//! agent can act on, scoped to exactly those agents. Its type distribution
//! is the exact marginal over the scope agents' observation tuples, computed
//! by enumerating the burn configurations of every house any scope agent
//! observes (burns are independent, sensor flips conditionally independent
//! given the burns); overlapping observations are therefore correlated
//! through the shared houses. All payoffs are penalties (entries <= 0).
//!
//! Conventions, all deterministic:
//! * distances compare squared Euclidean lengths, ties to the lower house
//!   index, so `observed[b]` and the action targets are the b-th nearest
//!   houses;
//! * bit `b` of an agent's type index is its observation of `observed[b]`
//!   (1 = flames);
//! * action `a` fights fire at the agent's a-th nearest house;
//! * the line layout alternates house, agent, house, ... at unit spacing
//!   (house `h` at x = 2h, agent `i` at x = 2i + 1); the uniform-square
//!   layout draws house then agent positions from stream 0 of the seed.

use rand::Rng;

use super::DomainError;
use crate::game::{Game, PayoffComponent};
use crate::index;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Houses and agents alternating on a line at unit spacing.
    Line,
    /// Seeded uniform positions in the unit square.
    UniformSquare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirefightingParams {
    pub n_agents: usize,
    pub n_houses: usize,
    /// Houses each agent observes; the type count per agent is
    /// `2^n_observed`.
    pub n_observed: usize,
    /// Houses each agent can fight fire at; the action count per agent.
    pub n_actionable: usize,
    /// Prior probability that a house burns.
    pub p_fire: f64,
    /// Probability an observation is flipped, in `[0, 0.5)`.
    pub obs_noise: f64,
    /// Residual damage factor per fighter, in `(0, 1)`.
    pub attenuation: f64,
    pub layout: Layout,
    /// Only used by the uniform-square layout.
    pub seed: u64,
}

impl FirefightingParams {
    /// Parameters with the default payoff model: `p_fire` 0.5, `obs_noise`
    /// 0.2, `attenuation` 0.4, line layout, seed 0.
    pub fn new(n_agents: usize, n_houses: usize, n_observed: usize, n_actionable: usize) -> Self {
        Self {
            n_agents,
            n_houses,
            n_observed,
            n_actionable,
            p_fire: 0.5,
            obs_noise: 0.2,
            attenuation: 0.4,
            layout: Layout::Line,
            seed: 0,
        }
    }
}

pub fn gen_firefighting(params: &FirefightingParams) -> Result<Game, DomainError> {
    validate(params)?;
    let n = params.n_agents;
    let n_types = 1usize << params.n_observed;

    let (houses, agents) = positions(params);

    // Per agent: houses by (squared distance, index); prefixes give the
    // observed and actionable sets.
    let nearest: Vec<Vec<usize>> = agents
        .iter()
        .map(|&(ax, ay)| {
            let mut order: Vec<usize> = (0..params.n_houses).collect();
            order.sort_by(|&h1, &h2| {
                let d1 = sq_dist((ax, ay), houses[h1]);
                let d2 = sq_dist((ax, ay), houses[h2]);
                d1.partial_cmp(&d2).unwrap().then(h1.cmp(&h2))
            });
            order
        })
        .collect();
    let observed: Vec<&[usize]> = nearest.iter().map(|o| &o[..params.n_observed]).collect();
    let actionable: Vec<&[usize]> = nearest.iter().map(|o| &o[..params.n_actionable]).collect();

    let mut components = Vec::new();
    for house in 0..params.n_houses {
        let scope: Vec<usize> = (0..n)
            .filter(|&i| actionable[i].contains(&house))
            .collect();
        if scope.is_empty() {
            continue;
        }
        components.push(build_component(params, house, &scope, &observed, &actionable));
    }

    Ok(Game::new(
        vec![params.n_actionable; n],
        vec![n_types; n],
        components,
    )?)
}

fn validate(params: &FirefightingParams) -> Result<(), DomainError> {
    let bad = |msg: &str| Err(DomainError::InvalidParams(msg.into()));
    if params.n_agents == 0 || params.n_houses == 0 {
        return bad("need at least one agent and one house");
    }
    if params.n_observed == 0 || params.n_observed > params.n_houses {
        return bad("n_observed must be in 1..=n_houses");
    }
    if params.n_actionable == 0 || params.n_actionable > params.n_houses {
        return bad("n_actionable must be in 1..=n_houses");
    }
    if params.n_observed >= usize::BITS as usize {
        return bad("n_observed too large: the type count 2^n_observed overflows");
    }
    if !(0.0..=1.0).contains(&params.p_fire) {
        return bad("p_fire must be in [0, 1]");
    }
    if !(0.0..0.5).contains(&params.obs_noise) {
        return bad("obs_noise must be in [0, 0.5)");
    }
    if !(params.attenuation > 0.0 && params.attenuation < 1.0) {
        return bad("attenuation must be in (0, 1)");
    }
    Ok(())
}

type Point = (f64, f64);

fn positions(params: &FirefightingParams) -> (Vec<Point>, Vec<Point>) {
    match params.layout {
        Layout::Line => (
            (0..params.n_houses).map(|h| (2.0 * h as f64, 0.0)).collect(),
            (0..params.n_agents)
                .map(|i| (2.0 * i as f64 + 1.0, 0.0))
                .collect(),
        ),
        Layout::UniformSquare => {
            let mut rng = stream_rng(params.seed, 0);
            let mut draw = |count: usize| {
                (0..count)
                    .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
                    .collect::<Vec<_>>()
            };
            let houses = draw(params.n_houses);
            let agents = draw(params.n_agents);
            (houses, agents)
        }
    }
}

fn sq_dist(a: Point, b: Point) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

fn build_component(
    params: &FirefightingParams,
    house: usize,
    scope: &[usize],
    observed: &[&[usize]],
    actionable: &[&[usize]],
) -> PayoffComponent {
    let n_types = 1usize << params.n_observed;
    let type_sizes = vec![n_types; scope.len()];
    let action_sizes = vec![params.n_actionable; scope.len()];
    let n_local_types = index::table_len(&type_sizes);
    let n_local_actions = index::table_len(&action_sizes);

    // Houses any scope agent observes, deduplicated and sorted; burn
    // configurations are enumerated over exactly these.
    let mut shared: Vec<usize> = scope
        .iter()
        .flat_map(|&i| observed[i].iter().copied())
        .collect();
    shared.sort_unstable();
    shared.dedup();
    let house_pos = |h: usize| shared.binary_search(&h).unwrap();

    // For the posterior: which scope agents observe the component's house,
    // and at which bit of their type index.
    let watchers: Vec<(usize, usize)> = scope
        .iter()
        .enumerate()
        .filter_map(|(pos, &i)| {
            observed[i].iter().position(|&h| h == house).map(|bit| (pos, bit))
        })
        .collect();

    let p = params.p_fire;
    let eps = params.obs_noise;
    let mut prob = Vec::with_capacity(n_local_types);
    let mut posterior = Vec::with_capacity(n_local_types);
    let mut theta = vec![0usize; scope.len()];
    loop {
        // Exact marginal of this observation tuple: sum over burn
        // configurations of the shared houses.
        let mut mass = 0.0;
        for burns in 0..(1usize << shared.len()) {
            let mut term = 1.0;
            for pos in 0..shared.len() {
                term *= if burns >> pos & 1 == 1 { p } else { 1.0 - p };
                if term == 0.0 {
                    break;
                }
            }
            if term == 0.0 {
                continue;
            }
            for (pos, &agent) in scope.iter().enumerate() {
                for (bit, &h) in observed[agent].iter().enumerate() {
                    let saw_flames = theta[pos] >> bit & 1 == 1;
                    let burning = burns >> house_pos(h) & 1 == 1;
                    term *= if saw_flames == burning { 1.0 - eps } else { eps };
                }
            }
            mass += term;
        }
        prob.push(mass);

        // Pr(house burns | the observations of it contained in theta).
        let mut like_burn = p;
        let mut like_safe = 1.0 - p;
        for &(pos, bit) in &watchers {
            let saw_flames = theta[pos] >> bit & 1 == 1;
            like_burn *= if saw_flames { 1.0 - eps } else { eps };
            like_safe *= if saw_flames { eps } else { 1.0 - eps };
        }
        let denominator = like_burn + like_safe;
        // Impossible evidence (probability-zero type) gets posterior 0 so
        // the payoff entry stays finite.
        posterior.push(if denominator > 0.0 {
            like_burn / denominator
        } else {
            0.0
        });

        if !index::next_tuple(&type_sizes, &mut theta) {
            break;
        }
    }

    let mut payoff = Vec::with_capacity(n_local_types * n_local_actions);
    for &post in &posterior {
        let mut action = vec![0usize; scope.len()];
        loop {
            let fighters = scope
                .iter()
                .zip(&action)
                .filter(|&(&agent, &a)| actionable[agent][a] == house)
                .count();
            payoff.push(-post * params.attenuation.powi(fighters as i32));
            if !index::next_tuple(&action_sizes, &mut action) {
                break;
            }
        }
    }

    PayoffComponent {
        scope: scope.to_vec(),
        local_type_prob: prob,
        payoff,
    }
}
