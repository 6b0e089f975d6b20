//! Versioned JSON game files.
//!
//! A game file is a single JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "n_agents": 2,
//!   "action_sizes": [2, 2],
//!   "type_sizes": [2, 2],
//!   "components": [
//!     { "scope": [0, 1], "prob": [  ...  ], "payoff": [ ... ] }
//!   ]
//! }
//! ```
//!
//! `prob` is flat and row-major over the scope agents' type sizes (last
//! scope member fastest); `payoff` is local-joint-type-major then
//! local-joint-action, with the same row-major convention. Reals round-trip
//! losslessly: serialization uses the shortest decimal form that parses back
//! to the identical IEEE-754 double. Loading re-validates every game
//! invariant.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Game, GameError, PayoffComponent};

pub const GAME_FILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GameFileError {
    #[error("unsupported game file version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },
    #[error("game file declares {declared} agents but lists {got} sizes")]
    AgentCountMismatch { declared: usize, got: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct GameFile {
    version: u32,
    n_agents: usize,
    action_sizes: Vec<usize>,
    type_sizes: Vec<usize>,
    components: Vec<ComponentFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ComponentFile {
    scope: Vec<usize>,
    prob: Vec<f64>,
    payoff: Vec<f64>,
}

pub fn game_to_json(game: &Game) -> String {
    let file = GameFile {
        version: GAME_FILE_VERSION,
        n_agents: game.n_agents(),
        action_sizes: game.action_sizes().to_vec(),
        type_sizes: game.type_sizes().to_vec(),
        components: game
            .components()
            .iter()
            .map(|c| ComponentFile {
                scope: c.scope.clone(),
                prob: c.local_type_prob.clone(),
                payoff: c.payoff.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("game files serialize")
}

pub fn game_from_json(text: &str) -> Result<Game, GameFileError> {
    let file: GameFile = serde_json::from_str(text)?;
    if file.version != GAME_FILE_VERSION {
        return Err(GameFileError::Version {
            found: file.version,
            supported: GAME_FILE_VERSION,
        });
    }
    if file.action_sizes.len() != file.n_agents || file.type_sizes.len() != file.n_agents {
        return Err(GameFileError::AgentCountMismatch {
            declared: file.n_agents,
            got: file.action_sizes.len().max(file.type_sizes.len()),
        });
    }
    let components = file
        .components
        .into_iter()
        .map(|c| PayoffComponent {
            scope: c.scope,
            local_type_prob: c.prob,
            payoff: c.payoff,
        })
        .collect();
    Ok(Game::new(file.action_sizes, file.type_sizes, components)?)
}

pub fn write_game_file(game: &Game, path: &Path) -> Result<(), GameFileError> {
    let mut text = game_to_json(game);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_game_file(path: &Path) -> Result<Game, GameFileError> {
    let text = fs::read_to_string(path)?;
    game_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{gen_firefighting, gen_random_cgbg, FirefightingParams};

    fn assert_round_trip(game: &Game) {
        let json = game_to_json(game);
        let back = game_from_json(&json).unwrap();
        assert_eq!(back.n_agents(), game.n_agents());
        assert_eq!(back.action_sizes(), game.action_sizes());
        assert_eq!(back.type_sizes(), game.type_sizes());
        assert_eq!(back.components().len(), game.components().len());
        for (a, b) in game.components().iter().zip(back.components()) {
            assert_eq!(a.scope, b.scope);
            let bits = |xs: &[f64]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.local_type_prob), bits(&b.local_type_prob));
            assert_eq!(bits(&a.payoff), bits(&b.payoff));
        }
    }

    #[test]
    fn round_trip_preserves_every_bit() {
        for seed in 0..5 {
            assert_round_trip(&gen_random_cgbg(4, 2, 3, 2, seed).unwrap());
        }
        assert_round_trip(&gen_firefighting(&FirefightingParams::new(2, 3, 1, 2)).unwrap());
    }

    #[test]
    fn version_and_shape_are_checked() {
        let game = gen_random_cgbg(2, 2, 2, 2, 0).unwrap();
        let json = game_to_json(&game);
        let wrong_version = json.replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(
            game_from_json(&wrong_version),
            Err(GameFileError::Version { found: 99, .. })
        ));
        let wrong_agents = json.replace("\"n_agents\": 2", "\"n_agents\": 3");
        assert!(matches!(
            game_from_json(&wrong_agents),
            Err(GameFileError::AgentCountMismatch { .. })
        ));
        assert!(matches!(
            game_from_json("{ not json"),
            Err(GameFileError::Json(_))
        ));
    }

    #[test]
    fn invalid_games_are_rejected_on_load() {
        let game = gen_random_cgbg(2, 2, 2, 2, 1).unwrap();
        let json = game_to_json(&game);
        // Corrupt the probability mass.
        let first_prob = format!("{}", game.components()[0].local_type_prob[0]);
        let broken = json.replacen(&first_prob, "0.9999", 1);
        assert!(matches!(
            game_from_json(&broken),
            Err(GameFileError::Game(GameError::BadProbMass { .. }))
        ));
    }
}
