//! Seedable, platform-independent randomness.
//!
//! Everything randomized in this workspace draws from ChaCha8 generators
//! obtained through [`stream_rng`], so results are bit-identical across
//! platforms and runs. Consumers that need several independent sequences
//! from one seed take one stream per logical unit: the game generators use
//! stream 0 for structure and stream `e + 1` for payoff component `e`, and
//! max-sum uses stream `r` for restart `r`. Adding units therefore never
//! perturbs the draws of earlier ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The ChaCha8 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
