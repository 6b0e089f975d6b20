//! Problem generators.
//!
//! Both generators are pure functions of their parameters and seed, built on
//! the stream-splitting rule of [`crate::rng`]: stream 0 drives structure
//! (scopes, positions), stream `e + 1` fills the tables of component `e`.

mod firefighting;
mod random;

pub use firefighting::{gen_firefighting, FirefightingParams, Layout};
pub use random::gen_random_cgbg;

use thiserror::Error;

use crate::game::GameError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("scope size k={k} is invalid for {n_agents} agents")]
    InvalidScopeSize { k: usize, n_agents: usize },
    #[error("invalid generator parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Game(#[from] GameError),
}
