//! Additive factor graphs over finite-domain variables, and the two graph
//! encodings of a game's objective.
//!
//! A [`FactorGraph`] is bipartite: factors reference variables, never other
//! factors. Factor tables are dense and row-major over the neighbor domains
//! with the last neighbor varying fastest. The score of an assignment is the
//! plain sum of the selected table entries, factors in order.
//!
//! [`build_ai_fg`] encodes a game with one variable per agent whose domain
//! enumerates the agent's individual policies; [`build_ati_fg`] uses one
//! variable per (agent, type) pair whose domain is the agent's action set,
//! and one factor per (component, local joint type) pair holding that joint
//! type's probability-weighted payoff contribution. Both builders return an
//! index that converts between assignments and joint policies.

use thiserror::Error;

use crate::game::{Game, JointPolicy};
use crate::index;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorGraphError {
    #[error("variable {variable} has an empty domain")]
    EmptyDomain { variable: usize },
    #[error("factor {factor}: neighbor list is out of range or repeats a variable")]
    BadNeighbors { factor: usize },
    #[error("factor {factor}: table has {got} entries, expected {expected}")]
    BadTableLen {
        factor: usize,
        expected: usize,
        got: usize,
    },
    #[error("assignment has {got} entries, expected {expected}")]
    AssignmentLen { expected: usize, got: usize },
    #[error("assignment value {value} out of domain {domain} for variable {variable}")]
    ValueOutOfDomain {
        variable: usize,
        value: usize,
        domain: usize,
    },
    #[error("agent {agent}: the policy enumeration |A|^|Theta| overflows the index range")]
    PolicyDomainOverflow { agent: usize },
    #[error("a factor table size overflows the index range")]
    TableOverflow,
    #[error("assignment or policy shape mismatch")]
    ShapeMismatch,
}

/// A finite-domain variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub label: String,
    pub domain: usize,
}

/// A dense additive factor over an ordered list of neighbor variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub label: String,
    pub neighbors: Vec<usize>,
    pub table: Vec<f64>,
}

/// An immutable bipartite factor graph.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    variables: Vec<Variable>,
    factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn new(variables: Vec<Variable>, factors: Vec<Factor>) -> Result<Self, FactorGraphError> {
        for (v, var) in variables.iter().enumerate() {
            if var.domain == 0 {
                return Err(FactorGraphError::EmptyDomain { variable: v });
            }
        }
        for (f, factor) in factors.iter().enumerate() {
            let mut seen = vec![false; variables.len()];
            for &v in &factor.neighbors {
                if v >= variables.len() || seen[v] {
                    return Err(FactorGraphError::BadNeighbors { factor: f });
                }
                seen[v] = true;
            }
            let sizes: Vec<usize> = factor.neighbors.iter().map(|&v| variables[v].domain).collect();
            let expected =
                index::checked_table_len(&sizes).ok_or(FactorGraphError::TableOverflow)?;
            if factor.table.len() != expected {
                return Err(FactorGraphError::BadTableLen {
                    factor: f,
                    expected,
                    got: factor.table.len(),
                });
            }
        }
        Ok(Self { variables, factors })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn domain(&self, variable: usize) -> usize {
        self.variables[variable].domain
    }

    /// Total number of (factor, variable) edges.
    pub fn edge_count(&self) -> usize {
        self.factors.iter().map(|f| f.neighbors.len()).sum()
    }

    /// Number of factors each variable participates in.
    pub fn variable_degrees(&self) -> Vec<usize> {
        let mut degrees = vec![0usize; self.variables.len()];
        for factor in &self.factors {
            for &v in &factor.neighbors {
                degrees[v] += 1;
            }
        }
        degrees
    }

    /// Bytes held by the factor tables.
    pub fn table_bytes(&self) -> u128 {
        self.factors
            .iter()
            .map(|f| f.table.len() as u128 * std::mem::size_of::<f64>() as u128)
            .sum()
    }

    /// Sum of the table entries selected by `assignment`, factors in order.
    pub fn evaluate_assignment(&self, assignment: &[usize]) -> Result<f64, FactorGraphError> {
        if assignment.len() != self.variables.len() {
            return Err(FactorGraphError::AssignmentLen {
                expected: self.variables.len(),
                got: assignment.len(),
            });
        }
        for (v, (&value, var)) in assignment.iter().zip(&self.variables).enumerate() {
            if value >= var.domain {
                return Err(FactorGraphError::ValueOutOfDomain {
                    variable: v,
                    value,
                    domain: var.domain,
                });
            }
        }
        let mut total = 0.0;
        for factor in &self.factors {
            let mut idx = 0usize;
            for &v in &factor.neighbors {
                idx = idx * self.variables[v].domain + assignment[v];
            }
            total += factor.table[idx];
        }
        Ok(total)
    }
}

/// Converts between AI-graph assignments (one policy index per agent) and
/// joint policies.
///
/// An agent's policy index packs its type-to-action map with type 0 as the
/// least significant digit: the action for type `t` is
/// `(index / |A|^t) mod |A|`.
#[derive(Debug, Clone)]
pub struct AiIndex {
    action_sizes: Vec<usize>,
    type_sizes: Vec<usize>,
    policy_domains: Vec<usize>,
}

impl AiIndex {
    /// Policy-enumeration domain size of each agent's variable.
    pub fn policy_domains(&self) -> &[usize] {
        &self.policy_domains
    }

    /// Unpacks one agent's policy index into its type-to-action map.
    pub fn decode_agent(&self, agent: usize, mut policy_index: usize) -> Vec<usize> {
        let mut actions = Vec::with_capacity(self.type_sizes[agent]);
        for _ in 0..self.type_sizes[agent] {
            actions.push(policy_index % self.action_sizes[agent]);
            policy_index /= self.action_sizes[agent];
        }
        actions
    }

    /// Packs one agent's type-to-action map into its policy index.
    pub fn encode_agent(&self, agent: usize, actions: &[usize]) -> usize {
        let mut idx = 0usize;
        for &a in actions.iter().rev() {
            idx = idx * self.action_sizes[agent] + a;
        }
        idx
    }

    pub fn decode(&self, assignment: &[usize]) -> Result<JointPolicy, FactorGraphError> {
        if assignment.len() != self.policy_domains.len() {
            return Err(FactorGraphError::ShapeMismatch);
        }
        for (agent, (&value, &domain)) in assignment.iter().zip(&self.policy_domains).enumerate() {
            if value >= domain {
                return Err(FactorGraphError::ValueOutOfDomain {
                    variable: agent,
                    value,
                    domain,
                });
            }
        }
        Ok(JointPolicy::new(
            assignment
                .iter()
                .enumerate()
                .map(|(agent, &p)| self.decode_agent(agent, p))
                .collect(),
        ))
    }

    pub fn encode(&self, policy: &JointPolicy) -> Result<Vec<usize>, FactorGraphError> {
        if policy.per_agent().len() != self.policy_domains.len() {
            return Err(FactorGraphError::ShapeMismatch);
        }
        let mut assignment = Vec::with_capacity(self.policy_domains.len());
        for (agent, actions) in policy.per_agent().iter().enumerate() {
            if actions.len() != self.type_sizes[agent]
                || actions.iter().any(|&a| a >= self.action_sizes[agent])
            {
                return Err(FactorGraphError::ShapeMismatch);
            }
            assignment.push(self.encode_agent(agent, actions));
        }
        Ok(assignment)
    }
}

/// Builds the agent-independence factor graph of a game.
///
/// One variable per agent with domain `|A_i|^|Theta_i|` (its individual
/// policies), one factor per payoff component whose table over the scope
/// agents' policy indices is the component's expected local payoff. Fails
/// with a capacity error if some policy enumeration overflows the platform
/// index range; AI graphs are only meant for small type counts.
pub fn build_ai_fg(game: &Game) -> Result<(FactorGraph, AiIndex), FactorGraphError> {
    let n = game.n_agents();
    let mut policy_domains = Vec::with_capacity(n);
    for agent in 0..n {
        let mut domain: usize = 1;
        for _ in 0..game.type_size(agent) {
            domain = domain
                .checked_mul(game.action_size(agent))
                .ok_or(FactorGraphError::PolicyDomainOverflow { agent })?;
        }
        policy_domains.push(domain);
    }
    let ai = AiIndex {
        action_sizes: game.action_sizes().to_vec(),
        type_sizes: game.type_sizes().to_vec(),
        policy_domains: policy_domains.clone(),
    };

    let variables: Vec<Variable> = (0..n)
        .map(|i| Variable {
            label: format!("agent{i}"),
            domain: policy_domains[i],
        })
        .collect();

    let mut factors = Vec::with_capacity(game.components().len());
    for (e, comp) in game.components().iter().enumerate() {
        let sizes: Vec<usize> = comp.scope.iter().map(|&i| policy_domains[i]).collect();
        let len = index::checked_table_len(&sizes).ok_or(FactorGraphError::TableOverflow)?;
        let mut table = Vec::with_capacity(len);
        let mut digits = vec![0usize; sizes.len()];
        loop {
            let local_policy: Vec<Vec<usize>> = comp
                .scope
                .iter()
                .zip(&digits)
                .map(|(&agent, &p)| ai.decode_agent(agent, p))
                .collect();
            table.push(
                game.local_value(e, &local_policy)
                    .expect("decoded local policy is well-shaped"),
            );
            if !index::next_tuple(&sizes, &mut digits) {
                break;
            }
        }
        factors.push(Factor {
            label: format!("comp{e}"),
            neighbors: comp.scope.clone(),
            table,
        });
    }
    Ok((FactorGraph::new(variables, factors)?, ai))
}

/// Converts between ATI-graph assignments (one action per agent type) and
/// joint policies, and maps graph nodes back to game objects.
#[derive(Debug, Clone)]
pub struct AtiIndex {
    /// `var_offset[i]..var_offset[i + 1]` are agent `i`'s type variables.
    var_offset: Vec<usize>,
    /// `factor_offset[e]..factor_offset[e + 1]` are component `e`'s factors,
    /// ordered by the row-major local joint type index.
    factor_offset: Vec<usize>,
    action_sizes: Vec<usize>,
}

impl AtiIndex {
    /// Graph variable for `(agent, type)`.
    pub fn variable_index(&self, agent: usize, type_index: usize) -> usize {
        debug_assert!(type_index < self.var_offset[agent + 1] - self.var_offset[agent]);
        self.var_offset[agent] + type_index
    }

    /// `(agent, type)` of a graph variable.
    pub fn variable_of(&self, variable: usize) -> (usize, usize) {
        let agent = match self.var_offset.binary_search(&variable) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (agent, variable - self.var_offset[agent])
    }

    /// Graph factor for `(component, linear local joint type)`.
    pub fn factor_index(&self, component: usize, theta_index: usize) -> usize {
        debug_assert!(theta_index < self.factor_offset[component + 1] - self.factor_offset[component]);
        self.factor_offset[component] + theta_index
    }

    /// `(component, linear local joint type)` of a graph factor.
    pub fn factor_of(&self, factor: usize) -> (usize, usize) {
        let component = match self.factor_offset.binary_search(&factor) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (component, factor - self.factor_offset[component])
    }

    pub fn n_variables(&self) -> usize {
        *self.var_offset.last().unwrap()
    }

    pub fn n_factors(&self) -> usize {
        *self.factor_offset.last().unwrap()
    }

    pub fn decode(&self, assignment: &[usize]) -> Result<JointPolicy, FactorGraphError> {
        if assignment.len() != self.n_variables() {
            return Err(FactorGraphError::ShapeMismatch);
        }
        let n = self.var_offset.len() - 1;
        let mut per_agent = Vec::with_capacity(n);
        for agent in 0..n {
            let slice = &assignment[self.var_offset[agent]..self.var_offset[agent + 1]];
            for (t, &a) in slice.iter().enumerate() {
                if a >= self.action_sizes[agent] {
                    return Err(FactorGraphError::ValueOutOfDomain {
                        variable: self.var_offset[agent] + t,
                        value: a,
                        domain: self.action_sizes[agent],
                    });
                }
            }
            per_agent.push(slice.to_vec());
        }
        Ok(JointPolicy::new(per_agent))
    }

    pub fn encode(&self, policy: &JointPolicy) -> Result<Vec<usize>, FactorGraphError> {
        let n = self.var_offset.len() - 1;
        if policy.per_agent().len() != n {
            return Err(FactorGraphError::ShapeMismatch);
        }
        let mut assignment = Vec::with_capacity(self.n_variables());
        for (agent, actions) in policy.per_agent().iter().enumerate() {
            if actions.len() != self.var_offset[agent + 1] - self.var_offset[agent]
                || actions.iter().any(|&a| a >= self.action_sizes[agent])
            {
                return Err(FactorGraphError::ShapeMismatch);
            }
            assignment.extend_from_slice(actions);
        }
        Ok(assignment)
    }
}

/// Builds the agent-and-type-independence factor graph of a game.
///
/// One variable per (agent, type) with the agent's action set as domain; one
/// factor per (component, local joint type) connected to exactly the
/// variables `(i, theta_e[i])` for scope agents `i`, in scope order, with
/// table entries `Pr(theta_e) * u(theta_e, a_e)`. Factor order is
/// component-major, local joint types row-major within a component, so an
/// assignment's factor sum reproduces the policy value bit for bit.
pub fn build_ati_fg(game: &Game) -> (FactorGraph, AtiIndex) {
    let n = game.n_agents();
    let mut var_offset = vec![0usize; n + 1];
    for agent in 0..n {
        var_offset[agent + 1] = var_offset[agent] + game.type_size(agent);
    }
    let mut variables = Vec::with_capacity(var_offset[n]);
    for agent in 0..n {
        for t in 0..game.type_size(agent) {
            variables.push(Variable {
                label: format!("agent{agent}_type{t}"),
                domain: game.action_size(agent),
            });
        }
    }

    let mut factor_offset = vec![0usize; game.components().len() + 1];
    let mut factors = Vec::new();
    for (e, comp) in game.components().iter().enumerate() {
        let tsizes = game.scope_type_sizes(e);
        let n_actions = game.local_action_count(e);
        let mut theta = vec![0usize; comp.scope.len()];
        let mut theta_lin = 0usize;
        loop {
            let neighbors: Vec<usize> = comp
                .scope
                .iter()
                .zip(&theta)
                .map(|(&agent, &t)| var_offset[agent] + t)
                .collect();
            let base = theta_lin * n_actions;
            let prob = comp.local_type_prob[theta_lin];
            let table: Vec<f64> = (0..n_actions)
                .map(|a| prob * comp.payoff[base + a])
                .collect();
            factors.push(Factor {
                label: format!("comp{e}_theta{theta_lin}"),
                neighbors,
                table,
            });
            theta_lin += 1;
            if !index::next_tuple(tsizes, &mut theta) {
                break;
            }
        }
        factor_offset[e + 1] = factors.len();
    }

    let graph = FactorGraph::new(variables, factors)
        .expect("ATI construction yields a well-formed graph");
    let index = AtiIndex {
        var_offset,
        factor_offset,
        action_sizes: game.action_sizes().to_vec(),
    };
    (graph, index)
}

/// Estimated bytes to build and run message passing on a game's ATI graph:
/// factor tables plus four message buffers per edge (current and next, both
/// directions). Useful as a pre-build capacity gate.
pub fn estimate_ati_bytes(game: &Game) -> u128 {
    let mut bytes: u128 = 0;
    for e in 0..game.components().len() {
        let n_types = game.local_type_count(e) as u128;
        let n_actions = game.local_action_count(e) as u128;
        bytes += n_types * n_actions * 8;
        let per_edge_values: u128 = game.scope_action_sizes(e).iter().map(|&a| a as u128).sum();
        bytes += n_types * per_edge_values * 8 * 4;
    }
    bytes
}

/// Same estimate for the AI graph, or `None` when the policy enumeration
/// overflows.
pub fn estimate_ai_bytes(game: &Game) -> Option<u128> {
    let mut policy_domains = Vec::with_capacity(game.n_agents());
    for agent in 0..game.n_agents() {
        policy_domains.push(
            (game.action_size(agent) as u128)
                .checked_pow(u32::try_from(game.type_size(agent)).ok()?)?,
        );
    }
    let mut bytes: u128 = 0;
    for comp in game.components() {
        let table: u128 = comp
            .scope
            .iter()
            .try_fold(1u128, |acc, &i| acc.checked_mul(policy_domains[i]))?;
        bytes = bytes.checked_add(table.checked_mul(8)?)?;
        let per_edge: u128 = comp.scope.iter().map(|&i| policy_domains[i]).sum();
        bytes = bytes.checked_add(per_edge.checked_mul(8 * 4)?)?;
    }
    Some(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::PayoffComponent;

    fn tiny_game(action_sizes: Vec<usize>, type_sizes: Vec<usize>, scopes: Vec<Vec<usize>>) -> Game {
        let components = scopes
            .into_iter()
            .map(|scope| {
                let n_types: usize = scope.iter().map(|&i| type_sizes[i]).product();
                let n_actions: usize = scope.iter().map(|&i| action_sizes[i]).product();
                PayoffComponent {
                    scope,
                    local_type_prob: vec![1.0 / n_types as f64; n_types],
                    payoff: vec![0.0; n_types * n_actions],
                }
            })
            .collect();
        Game::new(action_sizes, type_sizes, components).unwrap()
    }

    #[test]
    fn ai_graph_has_one_variable_per_agent_and_one_factor_per_component() {
        // Five agents, four pairwise payoff components.
        let game = tiny_game(
            vec![2; 5],
            vec![2; 5],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]],
        );
        let (fg, _) = build_ai_fg(&game).unwrap();
        assert_eq!(fg.n_variables(), 5);
        assert_eq!(fg.n_factors(), 4);
    }

    #[test]
    fn ai_single_agent_enumerates_policies() {
        let game = tiny_game(vec![2], vec![2], vec![vec![0]]);
        let (fg, ai) = build_ai_fg(&game).unwrap();
        assert_eq!(fg.n_variables(), 1);
        assert_eq!(fg.domain(0), 4);
        assert_eq!(fg.factors()[0].table.len(), 4);
        // Type 0 is the least significant digit.
        assert_eq!(ai.decode_agent(0, 1), vec![1, 0]);
        assert_eq!(ai.decode_agent(0, 2), vec![0, 1]);
        assert_eq!(ai.encode_agent(0, &[1, 0]), 1);
    }

    #[test]
    fn ai_overflow_is_a_capacity_error() {
        let game = tiny_game(vec![3], vec![64], vec![vec![0]]);
        assert_eq!(
            build_ai_fg(&game).unwrap_err(),
            FactorGraphError::PolicyDomainOverflow { agent: 0 }
        );
    }

    #[test]
    fn ati_counts_match_the_three_agent_two_component_shape() {
        // Three agents, two types each, scopes {0,1} and {1,2}: six
        // variables, eight degree-2 factors.
        let game = tiny_game(vec![2; 3], vec![2; 3], vec![vec![0, 1], vec![1, 2]]);
        let (fg, ati) = build_ati_fg(&game);
        assert_eq!(fg.n_variables(), 6);
        assert_eq!(fg.n_factors(), 8);
        assert!(fg.factors().iter().all(|f| f.neighbors.len() == 2));
        assert_eq!(fg.edge_count(), 16);
        assert_eq!(ati.n_variables(), 6);
        assert_eq!(ati.n_factors(), 8);
        for f in 0..8 {
            let (e, theta) = ati.factor_of(f);
            assert_eq!(ati.factor_index(e, theta), f);
        }
        for v in 0..6 {
            let (agent, t) = ati.variable_of(v);
            assert_eq!(ati.variable_index(agent, t), v);
        }
    }

    #[test]
    fn ati_counts_match_the_two_agent_single_component_shape() {
        // Two agents, two types each, one component over both: four
        // variables, four factors.
        let game = tiny_game(vec![2; 2], vec![2; 2], vec![vec![0, 1]]);
        let (fg, _) = build_ati_fg(&game);
        assert_eq!(fg.n_variables(), 4);
        assert_eq!(fg.n_factors(), 4);
    }

    #[test]
    fn ati_single_agent_graph_is_a_forest_of_degree_one_factors() {
        let game = tiny_game(vec![2], vec![3], vec![vec![0]]);
        let (fg, _) = build_ati_fg(&game);
        assert_eq!(fg.n_variables(), 3);
        assert_eq!(fg.n_factors(), 3);
        assert!(fg.factors().iter().all(|f| f.neighbors.len() == 1));
    }

    #[test]
    fn ati_type_independence_wires_only_matching_types() {
        let game = tiny_game(vec![2; 3], vec![2; 3], vec![vec![0, 1], vec![1, 2]]);
        let (fg, ati) = build_ati_fg(&game);
        for (f, factor) in fg.factors().iter().enumerate() {
            let (e, theta_lin) = ati.factor_of(f);
            let scope = &game.components()[e].scope;
            let mut theta = vec![0usize; scope.len()];
            crate::index::delinearize(game.scope_type_sizes(e), theta_lin, &mut theta);
            for (pos, &agent) in scope.iter().enumerate() {
                assert_eq!(factor.neighbors[pos], ati.variable_index(agent, theta[pos]));
            }
        }
    }

    #[test]
    fn decoding_all_zeros_gives_the_all_zero_policy() {
        let game = tiny_game(vec![2; 3], vec![2; 3], vec![vec![0, 1], vec![1, 2]]);
        let (fg, ati) = build_ati_fg(&game);
        let policy = ati.decode(&vec![0; fg.n_variables()]).unwrap();
        assert_eq!(policy, JointPolicy::all_zero(&game));
    }

    #[test]
    fn evaluate_assignment_checks_domains() {
        let game = tiny_game(vec![2], vec![2], vec![vec![0]]);
        let (fg, _) = build_ati_fg(&game);
        assert_eq!(fg.evaluate_assignment(&[0, 0]).unwrap(), 0.0);
        assert!(matches!(
            fg.evaluate_assignment(&[0, 2]),
            Err(FactorGraphError::ValueOutOfDomain { .. })
        ));
        assert!(matches!(
            fg.evaluate_assignment(&[0]),
            Err(FactorGraphError::AssignmentLen { .. })
        ));
    }

    #[test]
    fn constant_zero_factor_scores_zero() {
        let fg = FactorGraph::new(
            vec![Variable {
                label: "v".into(),
                domain: 3,
            }],
            vec![Factor {
                label: "f".into(),
                neighbors: vec![0],
                table: vec![0.0; 3],
            }],
        )
        .unwrap();
        assert_eq!(fg.evaluate_assignment(&[2]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_malformed_graphs() {
        let v = |d: usize| Variable {
            label: "v".into(),
            domain: d,
        };
        assert!(matches!(
            FactorGraph::new(vec![v(0)], vec![]),
            Err(FactorGraphError::EmptyDomain { .. })
        ));
        assert!(matches!(
            FactorGraph::new(
                vec![v(2)],
                vec![Factor {
                    label: "f".into(),
                    neighbors: vec![0, 0],
                    table: vec![0.0; 4],
                }]
            ),
            Err(FactorGraphError::BadNeighbors { .. })
        ));
        assert!(matches!(
            FactorGraph::new(
                vec![v(2)],
                vec![Factor {
                    label: "f".into(),
                    neighbors: vec![0],
                    table: vec![0.0; 3],
                }]
            ),
            Err(FactorGraphError::BadTableLen { .. })
        ));
    }
}
