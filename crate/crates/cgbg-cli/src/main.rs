//! `cgbg` — generate, solve, verify, and benchmark cooperative graphical
//! Bayesian games.
//!
//! Exit codes: 0 success; 1 verification failure or internal error; 2
//! malformed input file; 3 unknown solver name; 4 resource-limit breach.

mod bench;
mod solvers;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cgbg::baselines::CeConfig;
use cgbg::domains::{gen_firefighting, gen_random_cgbg, FirefightingParams, Layout};
use cgbg::game::Game;
use cgbg::io::{read_game_file, write_game_file};
use cgbg::maxsum::{MaxSumConfig, Schedule};
use cgbg::ndp::OrderingHeuristic;
use cgbg::rel_diff;

use bench::{run_sweep, SweepSpec};
use solvers::{run_solver, RunOutcome, SolverKind, SolverOptions};

/// Relative tolerance for oracle agreement in `verify`.
const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug)]
pub enum CliError {
    /// Malformed game file, sweep file, or generator parameters. Exit 2.
    BadFile(String),
    /// Solver name not recognized. Exit 3.
    UnknownSolver(String),
    /// A resource limit was breached where that is fatal. Exit 4.
    Limit(String),
    /// Anything else. Exit 1.
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::BadFile(_) => 2,
            CliError::UnknownSolver(_) => 3,
            CliError::Limit(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::BadFile(msg)
            | CliError::UnknownSolver(msg)
            | CliError::Limit(msg)
            | CliError::Other(msg) => msg,
        }
    }
}

#[derive(Parser)]
#[command(name = "cgbg", version, about = "Cooperative graphical Bayesian game solver bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a game file.
    Generate(GenerateArgs),
    /// Solve a game file with one solver; prints a JSON summary on stdout.
    Solve(SolveArgs),
    /// Run brute force plus every solver and report optimality gaps.
    Verify(VerifyArgs),
    /// Run a parameter sweep described by a JSON spec; writes a CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DomainArg {
    Random,
    Firefighting,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LayoutArg {
    Line,
    UniformSquare,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    domain: DomainArg,
    /// Output game file.
    #[arg(long, short = 'o')]
    out: PathBuf,
    #[arg(long)]
    n_agents: usize,
    #[arg(long)]
    seed: u64,
    /// Scope size (random domain).
    #[arg(long)]
    k: Option<usize>,
    /// Actions per agent (random domain).
    #[arg(long)]
    n_actions: Option<usize>,
    /// Types per agent (random domain).
    #[arg(long)]
    n_types: Option<usize>,
    /// Houses (firefighting domain).
    #[arg(long)]
    n_houses: Option<usize>,
    /// Houses each agent observes (firefighting domain).
    #[arg(long)]
    n_observed: Option<usize>,
    /// Houses each agent can fight at (firefighting domain).
    #[arg(long)]
    n_actionable: Option<usize>,
    #[arg(long)]
    p_fire: Option<f64>,
    #[arg(long)]
    obs_noise: Option<f64>,
    #[arg(long)]
    attenuation: Option<f64>,
    #[arg(long, value_enum)]
    layout: Option<LayoutArg>,
}

#[derive(Args)]
struct SolveArgs {
    /// Game file to solve.
    #[arg(long)]
    game: PathBuf,
    /// One of: ndp-ati, ndp-ai, maxsum-ati, maxsum-ai, brute, altmax, ce.
    #[arg(long)]
    solver: String,
    #[command(flatten)]
    options: SolverArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    game: PathBuf,
    #[command(flatten)]
    options: SolverArgs,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Seed for the stochastic solvers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Max-sum restarts.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Max-sum iteration budget per restart.
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    /// Max-sum damping in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// Max-sum convergence tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Max-sum schedule: parallel or sequential-random.
    #[arg(long, default_value = "parallel")]
    schedule: String,
    /// NDP elimination heuristic: min-fill or min-neighbors.
    #[arg(long, default_value = "min-fill")]
    heuristic: String,
    /// Alternating-maximization sweep budget.
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    /// Cross-entropy population size.
    #[arg(long, default_value_t = 100)]
    population: usize,
    /// Cross-entropy elite fraction.
    #[arg(long, default_value_t = 0.1)]
    elite_fraction: f64,
    /// Cross-entropy smoothing factor.
    #[arg(long, default_value_t = 0.3)]
    smoothing: f64,
    /// Cross-entropy iteration budget.
    #[arg(long, default_value_t = 50)]
    ce_iterations: usize,
    /// Brute-force joint-policy cap.
    #[arg(long, default_value_t = 1u128 << 24)]
    brute_cap: u128,
    /// Memory cap in bytes for graphs and NDP intermediates.
    #[arg(long, default_value_t = 1u64 << 30)]
    memory_cap_bytes: u64,
    /// Optional wall-clock limit per solve, in milliseconds.
    #[arg(long)]
    time_limit_ms: Option<u64>,
}

impl SolverArgs {
    fn to_options(&self) -> Result<SolverOptions, CliError> {
        let schedule = match self.schedule.as_str() {
            "parallel" => Schedule::Parallel,
            "sequential-random" => Schedule::SequentialRandom,
            other => {
                return Err(CliError::BadFile(format!("unknown schedule `{other}`")));
            }
        };
        let heuristic = match self.heuristic.as_str() {
            "min-fill" => OrderingHeuristic::MinFill,
            "min-neighbors" => OrderingHeuristic::MinNeighbors,
            other => {
                return Err(CliError::BadFile(format!("unknown heuristic `{other}`")));
            }
        };
        Ok(SolverOptions {
            seed: self.seed,
            maxsum: MaxSumConfig {
                max_iterations: self.max_iterations,
                damping: self.damping,
                schedule,
                convergence_tolerance: self.tolerance,
                restarts: self.restarts,
                seed: self.seed,
            },
            heuristic,
            altmax_rounds: self.max_rounds,
            ce: CeConfig {
                population: self.population,
                elite_fraction: self.elite_fraction,
                smoothing: self.smoothing,
                iterations: self.ce_iterations,
                seed: self.seed,
            },
            brute_cap: self.brute_cap,
            memory_cap_bytes: self.memory_cap_bytes,
            time_limit: self.time_limit_ms.map(Duration::from_millis),
        })
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Sweep specification (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path.
    #[arg(long, short = 'o')]
    out: PathBuf,
    /// Leave the wall_time_ms column empty so repeated runs are
    /// byte-identical.
    #[arg(long)]
    no_timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Verify(args) => verify(args),
        Command::Bench(args) => bench_cmd(args),
    }
}

fn generate(args: GenerateArgs) -> Result<u8, CliError> {
    let require = |value: Option<usize>, name: &str| {
        value.ok_or_else(|| CliError::BadFile(format!("--{name} is required for this domain")))
    };
    let game = match args.domain {
        DomainArg::Random => gen_random_cgbg(
            args.n_agents,
            require(args.k, "k")?,
            require(args.n_actions, "n-actions")?,
            require(args.n_types, "n-types")?,
            args.seed,
        )
        .map_err(|err| CliError::BadFile(err.to_string()))?,
        DomainArg::Firefighting => {
            let mut params = FirefightingParams::new(
                args.n_agents,
                require(args.n_houses, "n-houses")?,
                require(args.n_observed, "n-observed")?,
                require(args.n_actionable, "n-actionable")?,
            );
            if let Some(p) = args.p_fire {
                params.p_fire = p;
            }
            if let Some(e) = args.obs_noise {
                params.obs_noise = e;
            }
            if let Some(g) = args.attenuation {
                params.attenuation = g;
            }
            params.layout = match args.layout {
                None | Some(LayoutArg::Line) => Layout::Line,
                Some(LayoutArg::UniformSquare) => Layout::UniformSquare,
            };
            params.seed = args.seed;
            gen_firefighting(&params).map_err(|err| CliError::BadFile(err.to_string()))?
        }
    };
    write_game_file(&game, &args.out).map_err(|err| CliError::Other(err.to_string()))?;
    eprintln!(
        "wrote {} ({} agents, {} components)",
        args.out.display(),
        game.n_agents(),
        game.components().len()
    );
    Ok(0)
}

fn load_game(path: &Path) -> Result<Game, CliError> {
    read_game_file(path).map_err(|err| CliError::BadFile(format!("{}: {err}", path.display())))
}

#[derive(Serialize)]
struct SolveReport<'a> {
    solver: &'a str,
    exceeded: bool,
    value: Option<f64>,
    policy: Option<&'a [Vec<usize>]>,
    iterations: Option<usize>,
    converged: Option<bool>,
    induced_width: Option<usize>,
    restarts: Option<usize>,
    messages_per_iteration: Option<usize>,
    rounds: Option<usize>,
}

fn solve(args: SolveArgs) -> Result<u8, CliError> {
    let kind = SolverKind::parse(&args.solver)
        .ok_or_else(|| CliError::UnknownSolver(args.solver.clone()))?;
    let game = load_game(&args.game)?;
    let options = args.options.to_options()?;
    let outcome = run_solver(&game, kind, &options)?;
    print_solve_report(kind, &outcome);
    eprintln!(
        "{}: build {:.3} ms, solve {:.3} ms",
        kind.name(),
        outcome.build_time.as_secs_f64() * 1e3,
        outcome.solve_time.as_secs_f64() * 1e3
    );
    if outcome.exceeded {
        return Err(CliError::Limit(format!(
            "{} exceeded its resource limits",
            kind.name()
        )));
    }
    Ok(0)
}

fn print_solve_report(kind: SolverKind, outcome: &RunOutcome) {
    let report = SolveReport {
        solver: kind.name(),
        exceeded: outcome.exceeded,
        value: outcome.value,
        policy: outcome.policy.as_ref().map(|p| p.per_agent()),
        iterations: outcome.iterations,
        converged: outcome.converged,
        induced_width: outcome.induced_width,
        restarts: outcome.restarts,
        messages_per_iteration: outcome.messages_per_iteration,
        rounds: outcome.rounds,
    };
    println!(
        "{}",
        serde_json::to_string(&report).expect("report serializes")
    );
}

#[derive(Serialize)]
struct VerifyReport {
    oracle_value: f64,
    solvers: Vec<VerifySolverReport>,
    ok: bool,
}

#[derive(Serialize)]
struct VerifySolverReport {
    solver: &'static str,
    exact: bool,
    exceeded: bool,
    value: Option<f64>,
    abs_gap: Option<f64>,
    rel_gap: Option<f64>,
    within_tolerance: Option<bool>,
}

fn verify(args: VerifyArgs) -> Result<u8, CliError> {
    let game = load_game(&args.game)?;
    let options = args.options.to_options()?;
    let (_, oracle_value) = cgbg::baselines::brute_force_with_cap(
        &game,
        options.brute_cap,
        options.time_limit,
    )
    .map_err(|err| CliError::Limit(format!("oracle enumeration failed: {err}")))?;

    let mut reports = Vec::new();
    let mut ok = true;
    for kind in SolverKind::ALL {
        if kind == SolverKind::Brute {
            continue;
        }
        let outcome = run_solver(&game, kind, &options)?;
        let gaps = outcome.value.map(|v| (oracle_value - v, rel_diff(oracle_value, v)));
        let within = gaps.map(|(_, rel)| rel <= VERIFY_TOLERANCE);
        if kind.is_exact() && within != Some(true) {
            ok = false;
        }
        eprintln!(
            "{:<12} value {:<24} gap {:<12} {}",
            kind.name(),
            outcome
                .value
                .map(|v| format!("{v:.12}"))
                .unwrap_or_else(|| "-".into()),
            gaps.map(|(abs, _)| format!("{abs:.3e}")).unwrap_or_else(|| "-".into()),
            if outcome.exceeded { "EXCEEDED" } else { "" }
        );
        reports.push(VerifySolverReport {
            solver: kind.name(),
            exact: kind.is_exact(),
            exceeded: outcome.exceeded,
            value: outcome.value,
            abs_gap: gaps.map(|(abs, _)| abs),
            rel_gap: gaps.map(|(_, rel)| rel),
            within_tolerance: within,
        });
    }
    let report = VerifyReport {
        oracle_value,
        solvers: reports,
        ok,
    };
    println!(
        "{}",
        serde_json::to_string(&report).expect("report serializes")
    );
    Ok(if ok { 0 } else { 1 })
}

fn bench_cmd(args: BenchArgs) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|err| CliError::BadFile(format!("{}: {err}", args.spec.display())))?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|err| CliError::BadFile(format!("{}: {err}", args.spec.display())))?;
    let any_exceeded = run_sweep(&spec, &args.out, args.no_timing)?;
    eprintln!("wrote {}", args.out.display());
    Ok(if any_exceeded { 4 } else { 0 })
}
