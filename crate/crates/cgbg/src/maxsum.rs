//! Anytime loopy max-sum message passing.
//!
//! Messages travel both ways over every (factor, variable) edge:
//!
//! * variable to factor: `q(x) = sum of r from the other incident factors`,
//!   then normalized by subtracting its mean;
//! * factor to variable: `r(x) = max over the factor's other neighbors of
//!   (table entry + sum of their q values)`;
//! * every update is damped: `new = damping * old + (1 - damping) * computed`.
//!
//! The `Parallel` schedule is synchronous flooding — all messages of an
//! iteration are computed from the previous iteration's messages. The
//! `SequentialRandom` schedule visits the directed messages in a fresh seeded
//! permutation each iteration, always reading the latest values.
//!
//! After every iteration the current assignment is decoded (per variable,
//! argmax of the summed incoming factor messages, ties to the lowest index)
//! and scored exactly through [`FactorGraph::evaluate_assignment`]; the best
//! decoded assignment across all iterations and restarts is returned, never
//! a message-implied value. Restart 0 starts from zero messages, later
//! restarts from independent uniform noise in `[0, 1)`. Max-sum is exact on
//! acyclic graphs; on cyclic graphs it may not converge, which is reported,
//! not an error.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::factor_graph::FactorGraph;
use crate::game::Game;
use crate::rng::stream_rng;
use crate::util::argmax_lowest;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaxSumError {
    #[error("invalid max-sum config: {0}")]
    InvalidConfig(&'static str),
}

/// Message-update schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Parallel,
    SequentialRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxSumConfig {
    /// Iteration budget per restart.
    pub max_iterations: usize,
    /// Damping coefficient in `[0, 1)`.
    pub damping: f64,
    pub schedule: Schedule,
    /// A restart counts as converged once the largest absolute message
    /// change in an iteration falls below this.
    pub convergence_tolerance: f64,
    /// Number of restarts; the first is zero-initialized, the rest start
    /// from uniform noise.
    pub restarts: usize,
    /// Seed for restart noise and sequential schedules; restart `r` draws
    /// from stream `r` of this seed.
    pub seed: u64,
}

impl Default for MaxSumConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            damping: 0.5,
            schedule: Schedule::Parallel,
            convergence_tolerance: 1e-6,
            restarts: 10,
            seed: 0,
        }
    }
}

impl MaxSumConfig {
    pub fn validate(&self) -> Result<(), MaxSumError> {
        if self.max_iterations == 0 {
            return Err(MaxSumError::InvalidConfig("max_iterations must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(MaxSumError::InvalidConfig("damping must be in [0, 1)"));
        }
        if self.convergence_tolerance.is_nan() || self.convergence_tolerance <= 0.0 {
            return Err(MaxSumError::InvalidConfig("tolerance must be positive"));
        }
        if self.restarts == 0 {
            return Err(MaxSumError::InvalidConfig("restarts must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartStats {
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute message change of the final iteration.
    pub final_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxSumResult {
    /// Best decoded assignment across all iterations and restarts.
    pub assignment: Vec<usize>,
    /// Its exact score under the factor graph.
    pub value: f64,
    pub restarts: Vec<RestartStats>,
    /// Directed messages computed per full iteration: twice the edge count.
    pub messages_per_iteration: usize,
}

impl MaxSumResult {
    /// True when every restart reached the convergence tolerance.
    pub fn all_converged(&self) -> bool {
        self.restarts.iter().all(|r| r.converged)
    }

    /// Total iterations across restarts.
    pub fn total_iterations(&self) -> usize {
        self.restarts.iter().map(|r| r.iterations).sum()
    }
}

/// Runs max-sum on a factor graph.
pub fn run_maxsum(fg: &FactorGraph, config: &MaxSumConfig) -> Result<MaxSumResult, MaxSumError> {
    run_maxsum_limited(fg, config, None).map(|(result, _)| result)
}

/// Runs max-sum with an optional wall-clock budget.
///
/// The budget is checked at iteration boundaries; on expiry the best
/// assignment decoded so far is returned together with `true`. At least one
/// iteration always runs.
pub fn run_maxsum_limited(
    fg: &FactorGraph,
    config: &MaxSumConfig,
    time_limit: Option<Duration>,
) -> Result<(MaxSumResult, bool), MaxSumError> {
    config.validate()?;
    let start = Instant::now();
    let deadline = time_limit.map(|limit| start + limit);

    let mut engine = Engine::new(fg);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut stats = Vec::with_capacity(config.restarts);
    let mut exceeded = false;
    let mut total_messages: u64 = 0;
    let mut total_iterations: u64 = 0;

    'all: for restart in 0..config.restarts {
        let mut rng = stream_rng(config.seed, restart as u64);
        if restart == 0 {
            engine.reset_zero();
        } else {
            engine.reset_noise(&mut rng);
        }
        let mut iterations = 0usize;
        let mut converged = false;
        let mut final_delta = f64::INFINITY;
        for _ in 0..config.max_iterations {
            let first_ever = restart == 0 && iterations == 0;
            if !first_ever {
                if let Some(d) = deadline {
                    if Instant::now() > d {
                        exceeded = true;
                        stats.push(RestartStats {
                            iterations,
                            converged,
                            final_delta,
                        });
                        break 'all;
                    }
                }
            }
            let delta = match config.schedule {
                Schedule::Parallel => engine.step_parallel(config.damping),
                Schedule::SequentialRandom => engine.step_sequential(config.damping, &mut rng),
            };
            iterations += 1;
            total_iterations += 1;
            total_messages += engine.messages_last_step as u64;

            let assignment = engine.decode();
            let value = fg
                .evaluate_assignment(&assignment)
                .expect("decoded assignment is in-domain");
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, assignment));
            }

            final_delta = delta;
            if delta < config.convergence_tolerance {
                converged = true;
                break;
            }
        }
        stats.push(RestartStats {
            iterations,
            converged,
            final_delta,
        });
    }

    let (value, assignment) = best.expect("at least one iteration ran");
    debug_assert!(
        total_iterations == 0 || total_messages.is_multiple_of(total_iterations),
        "every iteration sends the same message count"
    );
    let messages_per_iteration =
        total_messages.checked_div(total_iterations).unwrap_or(0) as usize;
    Ok((
        MaxSumResult {
            assignment,
            value,
            restarts: stats,
            messages_per_iteration,
        },
        exceeded,
    ))
}

/// One directed edge endpoint: factor `factor`, its `pos`-th neighbor `var`.
#[derive(Debug, Clone, Copy)]
struct Edge {
    factor: usize,
    var: usize,
    pos: usize,
}

/// Message state for one run. `q[e]` is the variable-to-factor message along
/// edge `e`, `r[e]` the factor-to-variable one; both have the variable's
/// domain as length. The hot paths are allocation-free: scratch buffers live
/// in the engine and per-factor geometry is precomputed.
struct Engine<'a> {
    fg: &'a FactorGraph,
    edges: Vec<Edge>,
    /// Edge ids incident to each variable.
    var_edges: Vec<Vec<usize>>,
    /// Edge ids of each factor, in neighbor order.
    factor_edges: Vec<Vec<usize>>,
    /// Neighbor domain sizes per factor.
    factor_sizes: Vec<Vec<usize>>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    next_q: Vec<Vec<f64>>,
    next_r: Vec<Vec<f64>>,
    digits: Vec<usize>,
    messages_last_step: usize,
}

impl<'a> Engine<'a> {
    fn new(fg: &'a FactorGraph) -> Self {
        let mut edges = Vec::with_capacity(fg.edge_count());
        let mut var_edges = vec![Vec::new(); fg.n_variables()];
        let mut factor_edges = Vec::with_capacity(fg.n_factors());
        let mut factor_sizes = Vec::with_capacity(fg.n_factors());
        let mut max_degree = 0;
        for (f, factor) in fg.factors().iter().enumerate() {
            let mut ids = Vec::with_capacity(factor.neighbors.len());
            for (pos, &var) in factor.neighbors.iter().enumerate() {
                let id = edges.len();
                edges.push(Edge { factor: f, var, pos });
                var_edges[var].push(id);
                ids.push(id);
            }
            max_degree = max_degree.max(factor.neighbors.len());
            factor_edges.push(ids);
            factor_sizes.push(factor.neighbors.iter().map(|&v| fg.domain(v)).collect());
        }
        let zeros: Vec<Vec<f64>> = edges
            .iter()
            .map(|e| vec![0.0; fg.domain(e.var)])
            .collect();
        Self {
            fg,
            edges,
            var_edges,
            factor_edges,
            factor_sizes,
            q: zeros.clone(),
            r: zeros.clone(),
            next_q: zeros.clone(),
            next_r: zeros,
            digits: vec![0; max_degree],
            messages_last_step: 0,
        }
    }

    fn n_edges(&self) -> usize {
        self.edges.len()
    }

    fn reset_zero(&mut self) {
        for m in self.q.iter_mut().chain(self.r.iter_mut()) {
            m.fill(0.0);
        }
    }

    /// Fills all messages with uniform `[0, 1)` noise: q messages first, then
    /// r, edge-ascending, entry-ascending.
    fn reset_noise(&mut self, rng: &mut ChaCha8Rng) {
        for m in self.q.iter_mut().chain(self.r.iter_mut()) {
            for slot in m.iter_mut() {
                *slot = rng.random::<f64>();
            }
        }
    }

    /// Variable-to-factor message along `edge`, mean-normalized, computed
    /// from the current r messages.
    fn compute_q(
        edges: &[Edge],
        var_edges: &[Vec<usize>],
        r: &[Vec<f64>],
        edge: usize,
        out: &mut [f64],
    ) {
        let var = edges[edge].var;
        out.fill(0.0);
        for &other in &var_edges[var] {
            if other == edge {
                continue;
            }
            for (slot, &m) in out.iter_mut().zip(&r[other]) {
                *slot += m;
            }
        }
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        for slot in out.iter_mut() {
            *slot -= mean;
        }
    }

    /// Factor-to-variable message along `edge`, computed from the current q
    /// messages by sweeping the factor's full table.
    #[allow(clippy::too_many_arguments)]
    fn compute_r(
        fg: &FactorGraph,
        edges: &[Edge],
        factor_edges: &[Vec<usize>],
        factor_sizes: &[Vec<usize>],
        q: &[Vec<f64>],
        edge: usize,
        out: &mut [f64],
        digits: &mut [usize],
    ) {
        let Edge {
            factor: factor_idx,
            pos: target_pos,
            ..
        } = edges[edge];
        let table = &fg.factors()[factor_idx].table;
        let edge_ids = &factor_edges[factor_idx];
        let sizes = &factor_sizes[factor_idx];
        let digits = &mut digits[..sizes.len()];
        digits.fill(0);
        out.fill(f64::NEG_INFINITY);
        let mut flat = 0usize;
        loop {
            let mut score = table[flat];
            for (pos, &id) in edge_ids.iter().enumerate() {
                if pos != target_pos {
                    score += q[id][digits[pos]];
                }
            }
            let slot = &mut out[digits[target_pos]];
            if score > *slot {
                *slot = score;
            }
            flat += 1;
            if !crate::index::next_tuple(sizes, digits) {
                break;
            }
        }
    }

    /// Synchronous flooding step: every message is computed from the previous
    /// iteration's messages, then damped. Returns the largest absolute
    /// change.
    fn step_parallel(&mut self, damping: f64) -> f64 {
        let n = self.n_edges();
        for e in 0..n {
            Self::compute_q(&self.edges, &self.var_edges, &self.r, e, &mut self.next_q[e]);
            Self::compute_r(
                self.fg,
                &self.edges,
                &self.factor_edges,
                &self.factor_sizes,
                &self.q,
                e,
                &mut self.next_r[e],
                &mut self.digits,
            );
        }
        let mut delta = 0.0f64;
        for e in 0..n {
            for (old, new) in self.q[e].iter_mut().zip(&self.next_q[e]) {
                let damped = damping * *old + (1.0 - damping) * new;
                delta = delta.max((damped - *old).abs());
                *old = damped;
            }
            for (old, new) in self.r[e].iter_mut().zip(&self.next_r[e]) {
                let damped = damping * *old + (1.0 - damping) * new;
                delta = delta.max((damped - *old).abs());
                *old = damped;
            }
        }
        self.messages_last_step = 2 * n;
        delta
    }

    /// Asynchronous step: visits the `2 * edges` directed messages in a
    /// seeded random permutation, each update reading the latest state.
    fn step_sequential(&mut self, damping: f64, rng: &mut ChaCha8Rng) -> f64 {
        let n = self.n_edges();
        let mut order: Vec<usize> = (0..2 * n).collect();
        order.shuffle(rng);
        let mut buf = vec![0.0f64; self.q.iter().map(|m| m.len()).max().unwrap_or(0)];
        let mut delta = 0.0f64;
        for id in order {
            let (slot, buf) = if id < n {
                let buf = &mut buf[..self.q[id].len()];
                Self::compute_q(&self.edges, &self.var_edges, &self.r, id, buf);
                (&mut self.q[id], buf)
            } else {
                let e = id - n;
                let buf = &mut buf[..self.r[e].len()];
                Self::compute_r(
                    self.fg,
                    &self.edges,
                    &self.factor_edges,
                    &self.factor_sizes,
                    &self.q,
                    e,
                    buf,
                    &mut self.digits,
                );
                (&mut self.r[e], buf)
            };
            for (old, new) in slot.iter_mut().zip(buf.iter()) {
                let damped = damping * *old + (1.0 - damping) * new;
                delta = delta.max((damped - *old).abs());
                *old = damped;
            }
        }
        self.messages_last_step = 2 * n;
        delta
    }

    /// Per-variable argmax of the summed incoming factor messages, ties to
    /// the lowest value index.
    fn decode(&self) -> Vec<usize> {
        let mut belief = vec![
            0.0f64;
            self.fg.variables().iter().map(|v| v.domain).max().unwrap_or(0)
        ];
        (0..self.fg.n_variables())
            .map(|v| {
                let belief = &mut belief[..self.fg.domain(v)];
                belief.fill(0.0);
                for &e in &self.var_edges[v] {
                    for (slot, &m) in belief.iter_mut().zip(&self.r[e]) {
                        *slot += m;
                    }
                }
                argmax_lowest(belief)
            })
            .collect()
    }
}

/// Structural message-cost accounting for one max-sum iteration on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageCostReport {
    /// Directed messages per full iteration: `2 * edge_count`.
    pub messages_per_iteration: usize,
    pub edge_count: usize,
    /// `F`: number of factors.
    pub factor_count: usize,
    pub variable_count: usize,
    /// `k`: largest factor degree.
    pub max_factor_degree: usize,
    /// `l`: largest variable degree.
    pub max_variable_degree: usize,
    /// `m`: largest variable domain.
    pub max_domain_size: usize,
}

pub fn message_cost_report(fg: &FactorGraph) -> MessageCostReport {
    let edge_count = fg.edge_count();
    MessageCostReport {
        messages_per_iteration: 2 * edge_count,
        edge_count,
        factor_count: fg.n_factors(),
        variable_count: fg.n_variables(),
        max_factor_degree: fg
            .factors()
            .iter()
            .map(|f| f.neighbors.len())
            .max()
            .unwrap_or(0),
        max_variable_degree: fg.variable_degrees().into_iter().max().unwrap_or(0),
        max_domain_size: fg.variables().iter().map(|v| v.domain).max().unwrap_or(0),
    }
}

/// Game-level quantities behind the per-iteration cost of max-sum on an ATI
/// graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameCostParams {
    /// `k`: largest component scope size.
    pub max_scope: usize,
    /// `rho`: number of payoff components.
    pub component_count: usize,
    /// `rho_star`: most components any one agent participates in.
    pub max_components_per_agent: usize,
}

pub fn game_cost_params(game: &Game) -> GameCostParams {
    let mut per_agent = vec![0usize; game.n_agents()];
    let mut max_scope = 0;
    for comp in game.components() {
        max_scope = max_scope.max(comp.scope.len());
        for &agent in &comp.scope {
            per_agent[agent] += 1;
        }
    }
    GameCostParams {
        max_scope,
        component_count: game.components().len(),
        max_components_per_agent: per_agent.into_iter().max().unwrap_or(0),
    }
}
