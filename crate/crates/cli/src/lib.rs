//! Command-line front end for `nash_elim`.
//!
//! Every subcommand writes its data (CSV for curves, JSON for reports) to
//! `--out` or stdout, plus a [`RunManifest`] that `replay` can re-run.
//! Exit codes: 0 success, 1 verification/convergence failure or runtime
//! error, 2 usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod error;
pub mod format;
pub mod manifest;

pub use error::{CliError, Result};
pub use manifest::RunManifest;

/// Environment variable overriding the default simulation seed.
pub const SEED_ENV: &str = "NASH_ELIM_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "nash-elim",
    version,
    about = "Equilibrium of the random-elimination game"
)]
pub struct Cli {
    /// Cap on worker threads (default: one per core).
    #[arg(long, global = true, value_parser = parse_positive)]
    pub threads: Option<usize>,

    /// Manifest path (default: `<out>.manifest.json`, or stderr without --out).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium density on a uniform grid of [0, 1].
    Density(DensityArgs),
    /// Rescaled densities N^-1 f(a + xi/N) next to the large-N limit.
    Scaling(ScalingArgs),
    /// Check indifference on the support and the deficit above it.
    Verify(VerifyArgs),
    /// Solve the binned game by fictitious play.
    Solve(SolveArgs),
    /// Monte Carlo tournament with every player on the equilibrium.
    Simulate(SimulateArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long, value_parser = parse_players)]
    pub n: usize,
    #[arg(long, default_value_t = 201, value_parser = parse_points)]
    pub points: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,20", value_parser = parse_players)]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true, value_parser = parse_xi_min)]
    pub xi_min: f64,
    #[arg(long, default_value_t = 201, value_parser = parse_points)]
    pub points: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_players)]
    pub n: usize,
    /// Points in each of the support and out-of-support grids.
    #[arg(long, default_value_t = 512, value_parser = parse_verify_grid)]
    pub grid: usize,
    /// Scale the density by (1 + perturb); any nonzero value breaks normalization.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true, value_parser = parse_perturb)]
    pub perturb: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long, value_parser = parse_players)]
    pub n: usize,
    #[arg(long, default_value_t = 2048, value_parser = parse_bins)]
    pub bins: usize,
    /// Residual (largest pure-strategy gain) accepted as converged.
    #[arg(long, default_value_t = 5e-3, value_parser = parse_tol)]
    pub tol: f64,
    /// Iteration cap [default: 1024 * bins].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Iterations before the stopping test applies [default: 512 * bins].
    #[arg(long)]
    pub min_iter: Option<usize>,
    /// Best-response spread scale; spread at step t is epsilon/sqrt(t+1) [default: 10 * tol].
    #[arg(long, value_parser = parse_nonnegative)]
    pub epsilon: Option<f64>,
    /// Weights CSV.
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report JSON [default: stdout when --out is given, else stderr].
    #[serde(skip)]
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_players)]
    pub n: usize,
    #[arg(long, default_value_t = 1_000_000, value_parser = parse_rounds)]
    pub rounds: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Pin player 1 to this pure choice.
    #[arg(long, value_parser = parse_unit)]
    pub deviate: Option<f64>,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest_path: PathBuf,
    /// Redirect the replayed output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_with<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn parse_players(s: &str) -> std::result::Result<usize, String> {
    let n: usize = parse_with(s)?;
    if n < 2 {
        return Err(format!("the game needs at least 2 players, got {n}"));
    }
    Ok(n)
}

fn parse_points(s: &str) -> std::result::Result<usize, String> {
    let n: usize = parse_with(s)?;
    if n < 2 {
        return Err(format!("need at least 2 points, got {n}"));
    }
    Ok(n)
}

fn parse_verify_grid(s: &str) -> std::result::Result<usize, String> {
    let n: usize = parse_with(s)?;
    if n < 16 {
        return Err(format!("need at least 16 grid points, got {n}"));
    }
    Ok(n)
}

fn parse_bins(s: &str) -> std::result::Result<usize, String> {
    let n: usize = parse_with(s)?;
    if n < nash_elim::solver::MIN_BINS {
        return Err(format!(
            "need at least {} bins, got {n}",
            nash_elim::solver::MIN_BINS
        ));
    }
    Ok(n)
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    let n: usize = parse_with(s)?;
    if n == 0 {
        return Err("must be at least 1".into());
    }
    Ok(n)
}

fn parse_rounds(s: &str) -> std::result::Result<u64, String> {
    let n: u64 = parse_with(s)?;
    if n == 0 {
        return Err("need at least 1 round".into());
    }
    Ok(n)
}

fn parse_tol(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_with(s)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(format!("must be positive, got {x}"));
    }
    Ok(x)
}

fn parse_nonnegative(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_with(s)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(format!("must be non-negative, got {x}"));
    }
    Ok(x)
}

fn parse_unit(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_with(s)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(format!("must lie in [0, 1], got {x}"));
    }
    Ok(x)
}

fn parse_xi_min(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_with(s)?;
    if !(x < 0.0 && x.is_finite()) {
        return Err(format!("must be negative, got {x}"));
    }
    Ok(x)
}

fn parse_perturb(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse_with(s)?;
    if !(x > -1.0 && x.is_finite()) {
        return Err(format!("must exceed -1, got {x}"));
    }
    Ok(x)
}

/// Outcome of a subcommand that produced its outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// Verification or convergence failed; outputs are still written.
    Fail,
}

impl Status {
    fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(threads) = cli.threads {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match execute(&cli) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line, writing outputs and the manifest.
pub fn execute(cli: &Cli) -> Result<Status> {
    if let Command::Replay(r) = &cli.command {
        return replay(r, cli);
    }
    let start = Instant::now();
    let run = commands::dispatch(&cli.command)?;
    let manifest = RunManifest {
        command: run.command.to_string(),
        args: run.args,
        params: run.params,
        seed: run.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: cli.threads,
        outputs: run.outputs.clone(),
        exit_code: run.status.exit_code(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let path = cli
        .manifest
        .clone()
        .or_else(|| run.outputs.first().map(|p| manifest::default_path(p)));
    match path {
        Some(p) => write_file(&p, &manifest.to_json())?,
        None => eprint!("{}", manifest.to_json()),
    }
    Ok(run.status)
}

fn replay(r: &ReplayArgs, outer: &Cli) -> Result<Status> {
    let recorded = RunManifest::load(&r.manifest_path)?;
    let mut argv = vec!["nash-elim".to_string()];
    argv.extend(recorded.args.iter().cloned());
    if let Some(out) = &r.out {
        argv.push("--out".into());
        argv.push(out.display().to_string());
    }
    let mut cli = Cli::try_parse_from(&argv)
        .map_err(|e| CliError::Usage(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot record a replay".into()));
    }
    cli.threads = outer.threads.or(recorded.threads);
    cli.manifest = outer.manifest.clone();
    execute(&cli)
}

pub(crate) fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| CliError::io(path, e))
}

/// Writes `content` to `out`, or to stdout.
pub(crate) fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, content),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}
