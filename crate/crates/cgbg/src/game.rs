//! The cooperative graphical Bayesian game model.
//!
//! A [`Game`] is a set of agents, each with a finite action set and a finite
//! type set, together with a list of [`PayoffComponent`]s. Each component
//! covers a *scope* of agents and carries two dense tables: a distribution
//! over the scope's local joint types and a payoff for every (local joint
//! type, local joint action) pair. The value of a [`JointPolicy`] is the sum
//! over components of the expected local payoff under that distribution.
//!
//! Tables are row-major in scope order with the last scope member varying
//! fastest (see [`crate::index`]); payoff tables are local-joint-type-major,
//! local-joint-action-minor.

use rand::Rng;
use thiserror::Error;

use crate::index;
use crate::util::{argmax_lowest, UnionFind};

/// Errors from game construction and the evaluation operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("game must have at least one agent")]
    NoAgents,
    #[error("action_sizes and type_sizes must both have one entry per agent")]
    SizeListMismatch,
    #[error("agent {agent} has an empty action or type set")]
    EmptySet { agent: usize },
    #[error("component {component}: scope must be non-empty, strictly increasing and in range")]
    BadScope { component: usize },
    #[error("component {component}: expected {expected} probability entries, got {got}")]
    BadProbLen {
        component: usize,
        expected: usize,
        got: usize,
    },
    #[error("component {component}: expected {expected} payoff entries, got {got}")]
    BadPayoffLen {
        component: usize,
        expected: usize,
        got: usize,
    },
    #[error("component {component}: probabilities must be non-negative and sum to 1 (sum {sum})")]
    BadProbMass { component: usize, sum: f64 },
    #[error("agent {agent} appears in no payoff component")]
    UncoveredAgent { agent: usize },
    #[error("the component scopes do not connect all agents")]
    DisconnectedScopes,
    #[error("component index {index} out of range ({count} components)")]
    ComponentOutOfRange { index: usize, count: usize },
    #[error("policy shape does not match the game")]
    PolicyShape,
    #[error("index out of range")]
    IndexOutOfRange,
}

/// Tolerance on each component's probability mass.
pub const PROB_MASS_TOLERANCE: f64 = 1e-12;

/// One local payoff function: a scope of agents, a distribution over the
/// scope's local joint types, and a payoff table.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffComponent {
    /// Strictly increasing agent indices this component depends on.
    pub scope: Vec<usize>,
    /// `Pr(theta_e)`, row-major over the scope agents' type sizes.
    pub local_type_prob: Vec<f64>,
    /// `u(theta_e, a_e)`, local-joint-type-major then local-joint-action,
    /// both row-major over the scope.
    pub payoff: Vec<f64>,
}

/// Per-component table geometry, precomputed at construction.
#[derive(Debug, Clone)]
struct ComponentLayout {
    type_sizes: Vec<usize>,
    action_sizes: Vec<usize>,
    n_types: usize,
    n_actions: usize,
}

/// An immutable cooperative graphical Bayesian game.
#[derive(Debug, Clone)]
pub struct Game {
    action_sizes: Vec<usize>,
    type_sizes: Vec<usize>,
    components: Vec<PayoffComponent>,
    layouts: Vec<ComponentLayout>,
}

impl Game {
    /// Validates and builds a game.
    ///
    /// Checks every structural invariant: non-empty action/type sets, scopes
    /// strictly increasing and in range, table lengths matching the scope
    /// geometry, probabilities non-negative and summing to 1 within
    /// [`PROB_MASS_TOLERANCE`], every agent covered by some scope, and the
    /// scope hypergraph connected.
    pub fn new(
        action_sizes: Vec<usize>,
        type_sizes: Vec<usize>,
        components: Vec<PayoffComponent>,
    ) -> Result<Self, GameError> {
        if action_sizes.is_empty() {
            return Err(GameError::NoAgents);
        }
        if action_sizes.len() != type_sizes.len() {
            return Err(GameError::SizeListMismatch);
        }
        let n = action_sizes.len();
        for agent in 0..n {
            if action_sizes[agent] == 0 || type_sizes[agent] == 0 {
                return Err(GameError::EmptySet { agent });
            }
        }

        let mut covered = vec![false; n];
        let mut uf = UnionFind::new(n);
        let mut layouts = Vec::with_capacity(components.len());
        for (e, comp) in components.iter().enumerate() {
            let scope_ok = !comp.scope.is_empty()
                && comp.scope.windows(2).all(|w| w[0] < w[1])
                && *comp.scope.last().unwrap() < n;
            if !scope_ok {
                return Err(GameError::BadScope { component: e });
            }
            let tsizes: Vec<usize> = comp.scope.iter().map(|&i| type_sizes[i]).collect();
            let asizes: Vec<usize> = comp.scope.iter().map(|&i| action_sizes[i]).collect();
            let n_types = index::table_len(&tsizes);
            let n_actions = index::table_len(&asizes);
            if comp.local_type_prob.len() != n_types {
                return Err(GameError::BadProbLen {
                    component: e,
                    expected: n_types,
                    got: comp.local_type_prob.len(),
                });
            }
            if comp.payoff.len() != n_types * n_actions {
                return Err(GameError::BadPayoffLen {
                    component: e,
                    expected: n_types * n_actions,
                    got: comp.payoff.len(),
                });
            }
            if comp.local_type_prob.iter().any(|&p| p.is_nan() || p < 0.0) {
                return Err(GameError::BadProbMass {
                    component: e,
                    sum: f64::NAN,
                });
            }
            let sum: f64 = comp.local_type_prob.iter().sum();
            if (sum - 1.0).abs() > PROB_MASS_TOLERANCE {
                return Err(GameError::BadProbMass { component: e, sum });
            }
            for &i in &comp.scope {
                covered[i] = true;
                uf.union(comp.scope[0], i);
            }
            layouts.push(ComponentLayout {
                type_sizes: tsizes,
                action_sizes: asizes,
                n_types,
                n_actions,
            });
        }
        if let Some(agent) = covered.iter().position(|&c| !c) {
            return Err(GameError::UncoveredAgent { agent });
        }
        if !uf.all_connected() {
            return Err(GameError::DisconnectedScopes);
        }
        Ok(Self {
            action_sizes,
            type_sizes,
            components,
            layouts,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.action_sizes.len()
    }

    pub fn action_sizes(&self) -> &[usize] {
        &self.action_sizes
    }

    pub fn type_sizes(&self) -> &[usize] {
        &self.type_sizes
    }

    pub fn action_size(&self, agent: usize) -> usize {
        self.action_sizes[agent]
    }

    pub fn type_size(&self, agent: usize) -> usize {
        self.type_sizes[agent]
    }

    pub fn components(&self) -> &[PayoffComponent] {
        &self.components
    }

    /// Type sizes of the scope agents of component `e`, in scope order.
    pub fn scope_type_sizes(&self, e: usize) -> &[usize] {
        &self.layouts[e].type_sizes
    }

    /// Action sizes of the scope agents of component `e`, in scope order.
    pub fn scope_action_sizes(&self, e: usize) -> &[usize] {
        &self.layouts[e].action_sizes
    }

    /// Number of local joint types of component `e`.
    pub fn local_type_count(&self, e: usize) -> usize {
        self.layouts[e].n_types
    }

    /// Number of local joint actions of component `e`.
    pub fn local_action_count(&self, e: usize) -> usize {
        self.layouts[e].n_actions
    }

    /// Number of joint policies, or `None` if it overflows `u128`.
    pub fn joint_policy_count(&self) -> Option<u128> {
        let mut count: u128 = 1;
        for agent in 0..self.n_agents() {
            let per_agent = (self.action_sizes[agent] as u128)
                .checked_pow(u32::try_from(self.type_sizes[agent]).ok()?)?;
            count = count.checked_mul(per_agent)?;
        }
        Some(count)
    }

    fn check_component(&self, e: usize) -> Result<(), GameError> {
        if e >= self.components.len() {
            return Err(GameError::ComponentOutOfRange {
                index: e,
                count: self.components.len(),
            });
        }
        Ok(())
    }

    fn check_policy(&self, policy: &JointPolicy) -> Result<(), GameError> {
        if policy.per_agent.len() != self.n_agents() {
            return Err(GameError::PolicyShape);
        }
        for (agent, actions) in policy.per_agent.iter().enumerate() {
            if actions.len() != self.type_sizes[agent]
                || actions.iter().any(|&a| a >= self.action_sizes[agent])
            {
                return Err(GameError::PolicyShape);
            }
        }
        Ok(())
    }

    /// Expected local payoff of component `e` under a local policy.
    ///
    /// `local_policy` holds one type-to-action map per scope agent, in scope
    /// order. The sum runs over the local joint types in row-major order.
    pub fn local_value(&self, e: usize, local_policy: &[Vec<usize>]) -> Result<f64, GameError> {
        self.check_component(e)?;
        let comp = &self.components[e];
        let lay = &self.layouts[e];
        if local_policy.len() != comp.scope.len() {
            return Err(GameError::PolicyShape);
        }
        for (pos, map) in local_policy.iter().enumerate() {
            if map.len() != lay.type_sizes[pos] || map.iter().any(|&a| a >= lay.action_sizes[pos]) {
                return Err(GameError::PolicyShape);
            }
        }
        let mut value = 0.0;
        let mut theta = vec![0usize; comp.scope.len()];
        let mut theta_lin = 0usize;
        loop {
            let mut a_lin = 0usize;
            for pos in 0..comp.scope.len() {
                a_lin = a_lin * lay.action_sizes[pos] + local_policy[pos][theta[pos]];
            }
            value += comp.local_type_prob[theta_lin] * comp.payoff[theta_lin * lay.n_actions + a_lin];
            theta_lin += 1;
            if !index::next_tuple(&lay.type_sizes, &mut theta) {
                break;
            }
        }
        Ok(value)
    }

    /// Expected team payoff of a joint policy.
    ///
    /// This is the single source of truth for solution values: every solver's
    /// reported value must be reproducible by this function on the policy it
    /// returns. The accumulation order is fixed — components in order, local
    /// joint types row-major within each component — so results are
    /// bit-stable and match a flat sum of [`Game::local_contribution`] terms
    /// in that order exactly.
    pub fn evaluate_policy(&self, policy: &JointPolicy) -> Result<f64, GameError> {
        self.check_policy(policy)?;
        Ok(self.evaluate_unchecked(policy))
    }

    pub(crate) fn evaluate_unchecked(&self, policy: &JointPolicy) -> f64 {
        let mut total = 0.0;
        for (comp, lay) in self.components.iter().zip(&self.layouts) {
            let mut theta = vec![0usize; comp.scope.len()];
            let mut theta_lin = 0usize;
            loop {
                let mut a_lin = 0usize;
                for (pos, &agent) in comp.scope.iter().enumerate() {
                    a_lin = a_lin * lay.action_sizes[pos] + policy.action(agent, theta[pos]);
                }
                total +=
                    comp.local_type_prob[theta_lin] * comp.payoff[theta_lin * lay.n_actions + a_lin];
                theta_lin += 1;
                if !index::next_tuple(&lay.type_sizes, &mut theta) {
                    break;
                }
            }
        }
        total
    }

    /// `Pr(theta_e) * u(theta_e, a_e)` for component `e`, with both tuples
    /// given as row-major linear indices.
    pub fn local_contribution(
        &self,
        e: usize,
        theta_index: usize,
        action_index: usize,
    ) -> Result<f64, GameError> {
        self.check_component(e)?;
        let comp = &self.components[e];
        let lay = &self.layouts[e];
        if theta_index >= lay.n_types || action_index >= lay.n_actions {
            return Err(GameError::IndexOutOfRange);
        }
        Ok(comp.local_type_prob[theta_index]
            * comp.payoff[theta_index * lay.n_actions + action_index])
    }

    /// Best-response policy for one agent against a fixed joint policy.
    ///
    /// For each type of `agent` independently, picks the action maximizing
    /// the expected payoff over all components containing the agent, with the
    /// other scope agents playing `policy`. Ties break toward the lowest
    /// action index, so the result is deterministic, and substituting it into
    /// `policy` never decreases [`Game::evaluate_policy`].
    pub fn best_response(&self, policy: &JointPolicy, agent: usize) -> Result<Vec<usize>, GameError> {
        self.check_policy(policy)?;
        if agent >= self.n_agents() {
            return Err(GameError::IndexOutOfRange);
        }
        let n_actions = self.action_sizes[agent];
        let mut score = vec![vec![0.0f64; n_actions]; self.type_sizes[agent]];
        for (comp, lay) in self.components.iter().zip(&self.layouts) {
            let Some(agent_pos) = comp.scope.iter().position(|&j| j == agent) else {
                continue;
            };
            let mut theta = vec![0usize; comp.scope.len()];
            let mut theta_lin = 0usize;
            loop {
                let prob = comp.local_type_prob[theta_lin];
                for (candidate, slot) in score[theta[agent_pos]].iter_mut().enumerate() {
                    let mut a_lin = 0usize;
                    for (pos, &j) in comp.scope.iter().enumerate() {
                        let a = if pos == agent_pos {
                            candidate
                        } else {
                            policy.action(j, theta[pos])
                        };
                        a_lin = a_lin * lay.action_sizes[pos] + a;
                    }
                    *slot += prob * comp.payoff[theta_lin * lay.n_actions + a_lin];
                }
                theta_lin += 1;
                if !index::next_tuple(&lay.type_sizes, &mut theta) {
                    break;
                }
            }
        }
        Ok(score.iter().map(|row| argmax_lowest(row)).collect())
    }
}

/// A pure joint policy: one action per (agent, type).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointPolicy {
    per_agent: Vec<Vec<usize>>,
}

impl JointPolicy {
    /// Wraps per-agent type-to-action maps. Shape is validated by the game
    /// operations that consume the policy.
    pub fn new(per_agent: Vec<Vec<usize>>) -> Self {
        Self { per_agent }
    }

    /// The policy selecting action 0 for every type.
    pub fn all_zero(game: &Game) -> Self {
        Self {
            per_agent: (0..game.n_agents())
                .map(|i| vec![0usize; game.type_size(i)])
                .collect(),
        }
    }

    /// A uniformly random policy; draws are agent-major, type-minor.
    pub fn random<R: Rng>(game: &Game, rng: &mut R) -> Self {
        Self {
            per_agent: (0..game.n_agents())
                .map(|i| {
                    (0..game.type_size(i))
                        .map(|_| rng.random_range(0..game.action_size(i)))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn action(&self, agent: usize, type_index: usize) -> usize {
        self.per_agent[agent][type_index]
    }

    /// The type-to-action map of one agent.
    pub fn agent(&self, agent: usize) -> &[usize] {
        &self.per_agent[agent]
    }

    pub fn per_agent(&self) -> &[Vec<usize>] {
        &self.per_agent
    }

    /// Replaces one agent's map in place. Solvers mutate owned copies; shared
    /// policies stay immutable.
    pub fn set_agent(&mut self, agent: usize, actions: Vec<usize>) {
        self.per_agent[agent] = actions;
    }
}
