//! Solver dispatch shared by the `solve`, `verify`, and `bench` subcommands.

use std::time::{Duration, Instant};

use cgbg::baselines::{
    alt_max_limited, brute_force_with_cap, cross_entropy_limited, BaselineError, CeConfig,
    DEFAULT_POLICY_CAP,
};
use cgbg::game::{Game, JointPolicy};
use cgbg::maxsum::{run_maxsum_limited, MaxSumConfig};
use cgbg::ndp::{elimination_order, solve_ndp_with, NdpConfig, NdpError, OrderingHeuristic};
use cgbg::{build_ai_fg, build_ati_fg, FactorGraph};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    NdpAti,
    NdpAi,
    MaxSumAti,
    MaxSumAi,
    Brute,
    AltMax,
    Ce,
}

impl SolverKind {
    pub const ALL: [SolverKind; 7] = [
        SolverKind::NdpAti,
        SolverKind::NdpAi,
        SolverKind::MaxSumAti,
        SolverKind::MaxSumAi,
        SolverKind::Brute,
        SolverKind::AltMax,
        SolverKind::Ce,
    ];

    pub fn parse(name: &str) -> Option<SolverKind> {
        Some(match name {
            "ndp-ati" => SolverKind::NdpAti,
            "ndp-ai" => SolverKind::NdpAi,
            "maxsum-ati" => SolverKind::MaxSumAti,
            "maxsum-ai" => SolverKind::MaxSumAi,
            "brute" => SolverKind::Brute,
            "altmax" => SolverKind::AltMax,
            "ce" => SolverKind::Ce,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::NdpAti => "ndp-ati",
            SolverKind::NdpAi => "ndp-ai",
            SolverKind::MaxSumAti => "maxsum-ati",
            SolverKind::MaxSumAi => "maxsum-ai",
            SolverKind::Brute => "brute",
            SolverKind::AltMax => "altmax",
            SolverKind::Ce => "ce",
        }
    }

    /// Exact solvers must agree with the brute-force oracle.
    pub fn is_exact(self) -> bool {
        matches!(self, SolverKind::NdpAti | SolverKind::NdpAi | SolverKind::Brute)
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Seed handed to the stochastic solvers (max-sum restarts, altmax
    /// starting policy, cross-entropy sampling).
    pub seed: u64,
    pub maxsum: MaxSumConfig,
    pub heuristic: OrderingHeuristic,
    pub altmax_rounds: usize,
    pub ce: CeConfig,
    pub brute_cap: u128,
    /// Cap on graph memory and on NDP intermediate tables.
    pub memory_cap_bytes: u64,
    pub time_limit: Option<Duration>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            maxsum: MaxSumConfig::default(),
            heuristic: OrderingHeuristic::MinFill,
            altmax_rounds: 100,
            ce: CeConfig::default(),
            brute_cap: DEFAULT_POLICY_CAP,
            memory_cap_bytes: 1 << 30,
            time_limit: None,
        }
    }
}

/// Result of running one solver on one game.
///
/// A run that breached its time or memory budget reports `exceeded` and
/// carries no value or policy, mirroring how resource-limited benchmark
/// points are dropped rather than reported partially.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub value: Option<f64>,
    pub policy: Option<JointPolicy>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub induced_width: Option<usize>,
    pub restarts: Option<usize>,
    pub messages_per_iteration: Option<usize>,
    pub rounds: Option<usize>,
    pub exceeded: bool,
    /// Wall time of the solve call itself.
    pub solve_time: Duration,
    /// Wall time spent building the factor graph, when one is built.
    pub build_time: Duration,
}

fn exceeded_outcome(build_time: Duration) -> RunOutcome {
    RunOutcome {
        exceeded: true,
        build_time,
        ..Default::default()
    }
}

fn build_graph(
    game: &Game,
    ati: bool,
    memory_cap: u64,
) -> Result<Option<(FactorGraph, GraphDecoder, Duration)>, CliError> {
    let estimate = if ati {
        Some(cgbg::factor_graph::estimate_ati_bytes(game))
    } else {
        cgbg::factor_graph::estimate_ai_bytes(game)
    };
    match estimate {
        Some(bytes) if bytes <= memory_cap as u128 => {}
        // Too big (or unrepresentable): a capacity breach, not an error.
        _ => return Ok(None),
    }
    let started = Instant::now();
    let built = if ati {
        let (fg, index) = build_ati_fg(game);
        (fg, GraphDecoder::Ati(index))
    } else {
        match build_ai_fg(game) {
            Ok((fg, index)) => (fg, GraphDecoder::Ai(index)),
            Err(
                cgbg::factor_graph::FactorGraphError::PolicyDomainOverflow { .. }
                | cgbg::factor_graph::FactorGraphError::TableOverflow,
            ) => return Ok(None),
            Err(err) => return Err(CliError::Other(err.to_string())),
        }
    };
    Ok(Some((built.0, built.1, started.elapsed())))
}

enum GraphDecoder {
    Ati(cgbg::AtiIndex),
    Ai(cgbg::AiIndex),
}

impl GraphDecoder {
    fn decode(&self, assignment: &[usize]) -> JointPolicy {
        match self {
            GraphDecoder::Ati(index) => index.decode(assignment),
            GraphDecoder::Ai(index) => index.decode(assignment),
        }
        .expect("solver assignments are well-formed")
    }
}

pub fn run_solver(
    game: &Game,
    kind: SolverKind,
    options: &SolverOptions,
) -> Result<RunOutcome, CliError> {
    match kind {
        SolverKind::NdpAti | SolverKind::NdpAi => {
            let ati = kind == SolverKind::NdpAti;
            let Some((fg, decoder, build_time)) = build_graph(game, ati, options.memory_cap_bytes)?
            else {
                return Ok(exceeded_outcome(Duration::ZERO));
            };
            let ordering = elimination_order(&fg, &options.heuristic);
            let config = NdpConfig {
                memory_cap_bytes: options.memory_cap_bytes,
                time_limit: options.time_limit,
            };
            let started = Instant::now();
            match solve_ndp_with(&fg, &ordering, &config) {
                Ok(result) => Ok(RunOutcome {
                    value: Some(result.value),
                    policy: Some(decoder.decode(&result.assignment)),
                    induced_width: Some(result.induced_width),
                    solve_time: started.elapsed(),
                    build_time,
                    ..Default::default()
                }),
                Err(NdpError::MemoryCap { .. } | NdpError::TimeLimit { .. }) => {
                    let mut outcome = exceeded_outcome(build_time);
                    outcome.solve_time = started.elapsed();
                    Ok(outcome)
                }
                Err(err) => Err(CliError::Other(err.to_string())),
            }
        }
        SolverKind::MaxSumAti | SolverKind::MaxSumAi => {
            let ati = kind == SolverKind::MaxSumAti;
            let Some((fg, decoder, build_time)) = build_graph(game, ati, options.memory_cap_bytes)?
            else {
                return Ok(exceeded_outcome(Duration::ZERO));
            };
            let config = MaxSumConfig {
                seed: options.seed,
                ..options.maxsum.clone()
            };
            let started = Instant::now();
            let (result, exceeded) = run_maxsum_limited(&fg, &config, options.time_limit)
                .map_err(|err| CliError::Other(err.to_string()))?;
            let solve_time = started.elapsed();
            if exceeded {
                let mut outcome = exceeded_outcome(build_time);
                outcome.solve_time = solve_time;
                return Ok(outcome);
            }
            Ok(RunOutcome {
                value: Some(result.value),
                policy: Some(decoder.decode(&result.assignment)),
                iterations: Some(result.total_iterations()),
                converged: Some(result.all_converged()),
                restarts: Some(result.restarts.len()),
                messages_per_iteration: Some(result.messages_per_iteration),
                solve_time,
                build_time,
                ..Default::default()
            })
        }
        SolverKind::Brute => {
            let started = Instant::now();
            match brute_force_with_cap(game, options.brute_cap, options.time_limit) {
                Ok((policy, value)) => Ok(RunOutcome {
                    value: Some(value),
                    policy: Some(policy),
                    solve_time: started.elapsed(),
                    ..Default::default()
                }),
                Err(
                    BaselineError::PolicyCountExceedsCap { .. }
                    | BaselineError::PolicyCountOverflow
                    | BaselineError::TimeLimit,
                ) => {
                    let mut outcome = exceeded_outcome(Duration::ZERO);
                    outcome.solve_time = started.elapsed();
                    Ok(outcome)
                }
                Err(err) => Err(CliError::Other(err.to_string())),
            }
        }
        SolverKind::AltMax => {
            let started = Instant::now();
            let (result, exceeded) =
                alt_max_limited(game, options.seed, options.altmax_rounds, options.time_limit);
            let solve_time = started.elapsed();
            if exceeded {
                let mut outcome = exceeded_outcome(Duration::ZERO);
                outcome.solve_time = solve_time;
                return Ok(outcome);
            }
            Ok(RunOutcome {
                value: Some(result.value),
                policy: Some(result.policy),
                rounds: Some(result.rounds),
                converged: Some(result.rounds < options.altmax_rounds),
                iterations: Some(result.rounds),
                solve_time,
                ..Default::default()
            })
        }
        SolverKind::Ce => {
            let config = CeConfig {
                seed: options.seed,
                ..options.ce.clone()
            };
            let started = Instant::now();
            let ((policy, value), exceeded) =
                cross_entropy_limited(game, &config, options.time_limit);
            let solve_time = started.elapsed();
            if exceeded {
                let mut outcome = exceeded_outcome(Duration::ZERO);
                outcome.solve_time = solve_time;
                return Ok(outcome);
            }
            Ok(RunOutcome {
                value: Some(value),
                policy: Some(policy),
                iterations: Some(config.iterations),
                solve_time,
                ..Default::default()
            })
        }
    }
}
