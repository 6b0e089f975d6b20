//! Solver library for cooperative graphical Bayesian games (CGBGs).
//!
//! A CGBG models a team of agents acting simultaneously under imperfect
//! information: each agent privately observes its *type*, and the shared team
//! payoff decomposes into local payoff functions over small subsets of
//! agents. Solving the game means finding a joint policy (one type-to-action
//! map per agent) that maximizes the expected team payoff.
//!
//! The crate is organized around two factor-graph encodings of that
//! objective:
//!
//! * the **AI** (agent independence) graph has one variable per agent, whose
//!   values enumerate that agent's individual policies, and one factor per
//!   local payoff function;
//! * the **ATI** (agent and type independence) graph has one variable per
//!   (agent, type) pair, whose values are actions, and one factor per
//!   (local payoff function, local joint type) pair holding the
//!   probability-weighted payoff contribution of that joint type.
//!
//! Either graph can be handed to the exact variable-elimination solver
//! ([`ndp`]) or to anytime max-sum message passing ([`maxsum`]). The
//! [`baselines`] module adds exhaustive search (the test oracle),
//! alternating maximization, and cross-entropy optimization; [`domains`]
//! generates random games and a firefighting coordination problem; [`io`]
//! defines the JSON game-file format used by the benchmark CLI.

pub mod baselines;
pub mod domains;
pub mod factor_graph;
pub mod game;
pub mod index;
pub mod io;
pub mod maxsum;
pub mod ndp;
pub mod rng;
mod util;

pub use factor_graph::{build_ai_fg, build_ati_fg, AiIndex, AtiIndex, Factor, FactorGraph, Variable};
pub use game::{Game, GameError, JointPolicy, PayoffComponent};

/// Relative difference `|a - b| / max(|a|, |b|, 1)`.
///
/// This is the agreement measure used by every value-comparison check in the
/// workspace; the floor of 1 keeps comparisons of near-zero values sane.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
