//! Exact maximization by non-serial dynamic programming (variable
//! elimination).
//!
//! The forward pass eliminates variables in a given order: each step collects
//! the live factors containing the variable, records a best-response table
//! over the merged neighborhood, and replaces the collected factors with the
//! maximized one. The backward pass walks the order in reverse, each variable
//! selecting its recorded best response to the variables already decided.
//! The result is an exact maximizer of the factor-graph sum; ties break
//! toward the lowest value index everywhere.
//!
//! Intermediate tables are dense and grow exponentially with the induced
//! width of the ordering, so the solver carries a memory cap that turns that
//! blowup into a clean capacity error instead of an allocation failure.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::factor_graph::{FactorGraph, FactorGraphError};
use crate::index;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NdpError {
    #[error("ordering must be a permutation of the variable indices")]
    BadOrdering,
    #[error(
        "eliminating variable {variable} (step {step}) needs {needed_bytes} bytes of \
         intermediate tables, over the {cap_bytes}-byte cap"
    )]
    MemoryCap {
        variable: usize,
        step: usize,
        needed_bytes: u64,
        cap_bytes: u64,
    },
    #[error("time limit hit while eliminating variable {variable} (step {step})")]
    TimeLimit { variable: usize, step: usize },
    #[error(transparent)]
    Graph(#[from] FactorGraphError),
}

/// Elimination-order choice for [`elimination_order`].
#[derive(Debug, Clone, PartialEq)]
pub enum OrderingHeuristic {
    /// Repeatedly eliminate the variable with the fewest neighbors in the
    /// current interaction graph.
    MinNeighbors,
    /// Repeatedly eliminate the variable whose elimination adds the fewest
    /// fill edges. The default: it tends to give the lowest induced width.
    MinFill,
    /// A caller-supplied order, returned as-is.
    Given(Vec<usize>),
}

/// Interaction graph of a factor graph: variables adjacent iff they co-occur
/// in some factor. Ordered sets keep every choice deterministic.
fn interaction_graph(fg: &FactorGraph) -> Vec<BTreeSet<usize>> {
    let mut adjacency = vec![BTreeSet::new(); fg.n_variables()];
    for factor in fg.factors() {
        for &a in &factor.neighbors {
            for &b in &factor.neighbors {
                if a != b {
                    adjacency[a].insert(b);
                }
            }
        }
    }
    adjacency
}

fn connect_clique(adjacency: &mut [BTreeSet<usize>], members: &BTreeSet<usize>) {
    for &a in members {
        for &b in members {
            if a != b {
                adjacency[a].insert(b);
            }
        }
    }
}

fn remove_variable(adjacency: &mut [BTreeSet<usize>], v: usize) {
    let neighbors: Vec<usize> = adjacency[v].iter().copied().collect();
    for w in neighbors {
        adjacency[w].remove(&v);
    }
    adjacency[v].clear();
}

/// Computes an elimination ordering; deterministic, ties toward the lowest
/// variable index.
pub fn elimination_order(fg: &FactorGraph, heuristic: &OrderingHeuristic) -> Vec<usize> {
    match heuristic {
        OrderingHeuristic::Given(order) => return order.clone(),
        OrderingHeuristic::MinNeighbors | OrderingHeuristic::MinFill => {}
    }
    let mut adjacency = interaction_graph(fg);
    let mut remaining: BTreeSet<usize> = (0..fg.n_variables()).collect();
    let mut order = Vec::with_capacity(fg.n_variables());
    while !remaining.is_empty() {
        let mut best: Option<(usize, usize)> = None; // (score, variable)
        for &v in &remaining {
            let score = match heuristic {
                OrderingHeuristic::MinNeighbors => adjacency[v].len(),
                OrderingHeuristic::MinFill => {
                    let neighbors: Vec<usize> = adjacency[v].iter().copied().collect();
                    let mut fill = 0usize;
                    for (i, &a) in neighbors.iter().enumerate() {
                        for &b in &neighbors[i + 1..] {
                            if !adjacency[a].contains(&b) {
                                fill += 1;
                            }
                        }
                    }
                    fill
                }
                OrderingHeuristic::Given(_) => unreachable!(),
            };
            // Strict improvement only: ascending iteration keeps the lowest
            // index on ties.
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, v));
            }
        }
        let (_, v) = best.expect("remaining is non-empty");
        let clique = adjacency[v].clone();
        connect_clique(&mut adjacency, &clique);
        remove_variable(&mut adjacency, v);
        remaining.remove(&v);
        order.push(v);
    }
    order
}

/// Induced width of an ordering: the largest merged neighborhood (excluding
/// the variable itself) over all elimination steps. Runs on the interaction
/// graph only, without building tables.
pub fn induced_width(fg: &FactorGraph, ordering: &[usize]) -> Result<usize, NdpError> {
    check_permutation(fg, ordering)?;
    let mut adjacency = interaction_graph(fg);
    let mut width = 0usize;
    for &v in ordering {
        width = width.max(adjacency[v].len());
        let clique = adjacency[v].clone();
        connect_clique(&mut adjacency, &clique);
        remove_variable(&mut adjacency, v);
    }
    Ok(width)
}

fn check_permutation(fg: &FactorGraph, ordering: &[usize]) -> Result<(), NdpError> {
    if ordering.len() != fg.n_variables() {
        return Err(NdpError::BadOrdering);
    }
    let mut seen = vec![false; fg.n_variables()];
    for &v in ordering {
        if v >= seen.len() || seen[v] {
            return Err(NdpError::BadOrdering);
        }
        seen[v] = true;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct NdpConfig {
    /// Cap on live intermediate-table bytes (value tables plus recorded
    /// best-response tables). Default 1 GiB.
    pub memory_cap_bytes: u64,
    /// Optional wall-clock budget for the whole solve.
    pub time_limit: Option<Duration>,
}

impl Default for NdpConfig {
    fn default() -> Self {
        Self {
            memory_cap_bytes: 1 << 30,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdpResult {
    /// An exact maximizer of the factor-graph sum.
    pub assignment: Vec<usize>,
    /// Its score, recomputed through [`FactorGraph::evaluate_assignment`].
    pub value: f64,
    /// Largest merged neighborhood encountered while eliminating.
    pub induced_width: usize,
    /// The ordering that was used.
    pub ordering: Vec<usize>,
}

/// A live factor during elimination; `vars` is sorted ascending.
struct WorkFactor {
    vars: Vec<usize>,
    table: Vec<f64>,
}

struct BestResponse {
    variable: usize,
    scope: Vec<usize>,
    scope_sizes: Vec<usize>,
    choices: Vec<usize>,
}

/// Solves a factor graph exactly with the default config.
pub fn solve_ndp(fg: &FactorGraph, ordering: &[usize]) -> Result<NdpResult, NdpError> {
    solve_ndp_with(fg, ordering, &NdpConfig::default())
}

pub fn solve_ndp_with(
    fg: &FactorGraph,
    ordering: &[usize],
    config: &NdpConfig,
) -> Result<NdpResult, NdpError> {
    check_permutation(fg, ordering)?;
    let start = Instant::now();
    let deadline = config.time_limit.map(|limit| start + limit);

    // Original factors, with axes sorted ascending by variable index.
    let mut pool: Vec<Option<WorkFactor>> = fg
        .factors()
        .iter()
        .map(|f| Some(normalize_factor(fg, &f.neighbors, &f.table)))
        .collect();
    let mut var_factors: Vec<Vec<usize>> = vec![Vec::new(); fg.n_variables()];
    for (idx, wf) in pool.iter().enumerate() {
        for &v in &wf.as_ref().unwrap().vars {
            var_factors[v].push(idx);
        }
    }

    let mut live_bytes: u64 = 0;
    let mut width = 0usize;
    let mut responses: Vec<BestResponse> = Vec::with_capacity(fg.n_variables());

    for (step, &v) in ordering.iter().enumerate() {
        if let Some(d) = deadline {
            if Instant::now() > d {
                return Err(NdpError::TimeLimit { variable: v, step });
            }
        }
        let collected: Vec<usize> = var_factors[v]
            .iter()
            .copied()
            .filter(|&idx| pool[idx].is_some())
            .collect();

        // Merged scope minus the eliminated variable.
        let mut scope_set = BTreeSet::new();
        for &idx in &collected {
            for &w in &pool[idx].as_ref().unwrap().vars {
                if w != v {
                    scope_set.insert(w);
                }
            }
        }
        let scope: Vec<usize> = scope_set.into_iter().collect();
        width = width.max(scope.len());
        let scope_sizes: Vec<usize> = scope.iter().map(|&w| fg.domain(w)).collect();
        let table_len = index::checked_table_len(&scope_sizes).unwrap_or(usize::MAX);
        let step_bytes = (table_len as u64).saturating_mul(16); // f64 table + usize choices
        if table_len == usize::MAX || live_bytes.saturating_add(step_bytes) > config.memory_cap_bytes
        {
            return Err(NdpError::MemoryCap {
                variable: v,
                step,
                needed_bytes: step_bytes,
                cap_bytes: config.memory_cap_bytes,
            });
        }

        // Where each collected factor reads its digits from: position in the
        // scope tuple, or the eliminated variable itself.
        enum Source {
            Scope(usize),
            Eliminated,
        }
        let sources: Vec<Vec<Source>> = collected
            .iter()
            .map(|&idx| {
                pool[idx]
                    .as_ref()
                    .unwrap()
                    .vars
                    .iter()
                    .map(|&w| {
                        if w == v {
                            Source::Eliminated
                        } else {
                            Source::Scope(scope.binary_search(&w).unwrap())
                        }
                    })
                    .collect()
            })
            .collect();

        let v_domain = fg.domain(v);
        let mut table = Vec::with_capacity(table_len);
        let mut choices = Vec::with_capacity(table_len);
        let mut digits = vec![0usize; scope.len()];
        let mut filled = 0usize;
        loop {
            let mut best_value = f64::NEG_INFINITY;
            let mut best_choice = 0usize;
            for candidate in 0..v_domain {
                let mut sum = 0.0;
                for (c, &idx) in collected.iter().enumerate() {
                    let wf = pool[idx].as_ref().unwrap();
                    let mut flat = 0usize;
                    for (pos, source) in sources[c].iter().enumerate() {
                        let digit = match source {
                            Source::Scope(p) => digits[*p],
                            Source::Eliminated => candidate,
                        };
                        flat = flat * fg.domain(wf.vars[pos]) + digit;
                    }
                    sum += wf.table[flat];
                }
                if sum > best_value {
                    best_value = sum;
                    best_choice = candidate;
                }
            }
            table.push(best_value);
            choices.push(best_choice);
            filled += 1;
            if filled & 0xFFFF == 0 {
                if let Some(d) = deadline {
                    if Instant::now() > d {
                        return Err(NdpError::TimeLimit { variable: v, step });
                    }
                }
            }
            if !index::next_tuple(&scope_sizes, &mut digits) {
                break;
            }
        }

        // Retire the collected factors; intermediates release their value
        // tables, best-response tables stay live until the backward pass.
        for &idx in &collected {
            if idx >= fg.n_factors() {
                let wf = pool[idx].as_ref().unwrap();
                live_bytes = live_bytes.saturating_sub(wf.table.len() as u64 * 8);
            }
            pool[idx] = None;
        }
        live_bytes += step_bytes;
        let new_idx = pool.len();
        if !scope.is_empty() {
            for &w in &scope {
                var_factors[w].push(new_idx);
            }
        }
        pool.push(Some(WorkFactor { vars: scope.clone(), table }));
        responses.push(BestResponse {
            variable: v,
            scope,
            scope_sizes,
            choices,
        });
    }

    // Backward pass: decide variables in reverse elimination order.
    let mut assignment = vec![0usize; fg.n_variables()];
    for response in responses.iter().rev() {
        let digits: Vec<usize> = response.scope.iter().map(|&w| assignment[w]).collect();
        let flat = index::linearize(&response.scope_sizes, &digits);
        assignment[response.variable] = response.choices[flat];
    }

    let value = fg.evaluate_assignment(&assignment)?;
    Ok(NdpResult {
        assignment,
        value,
        induced_width: width,
        ordering: ordering.to_vec(),
    })
}

/// Reorders a factor's axes so its variables are sorted ascending.
fn normalize_factor(fg: &FactorGraph, neighbors: &[usize], table: &[f64]) -> WorkFactor {
    if neighbors.windows(2).all(|w| w[0] < w[1]) {
        return WorkFactor {
            vars: neighbors.to_vec(),
            table: table.to_vec(),
        };
    }
    let mut order: Vec<usize> = (0..neighbors.len()).collect();
    order.sort_by_key(|&p| neighbors[p]);
    let vars: Vec<usize> = order.iter().map(|&p| neighbors[p]).collect();
    let old_sizes: Vec<usize> = neighbors.iter().map(|&v| fg.domain(v)).collect();
    let new_sizes: Vec<usize> = vars.iter().map(|&v| fg.domain(v)).collect();
    let mut new_table = vec![0.0; table.len()];
    let mut old_digits = vec![0usize; neighbors.len()];
    let mut flat = 0usize;
    loop {
        let new_digits: Vec<usize> = order.iter().map(|&p| old_digits[p]).collect();
        new_table[index::linearize(&new_sizes, &new_digits)] = table[flat];
        flat += 1;
        if !index::next_tuple(&old_sizes, &mut old_digits) {
            break;
        }
    }
    WorkFactor {
        vars,
        table: new_table,
    }
}
