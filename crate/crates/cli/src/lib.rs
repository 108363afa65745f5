//! Command-line front end for the partition bandits: in-process runs on the
//! synthetic benchmarks, an ask/tell server for external objectives, trace
//! audits, the kernel smoothing demo and seed sweeps.

pub mod config;
pub mod gp_demo;
pub mod serve;
pub mod session;
pub mod trace;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{RunArgs, RunConfig};
use crate::session::Session;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("objective error: {0}")]
    Objective(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("the point-scattering audit failed")]
    AuditFailed,
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Trace(_) => 2,
            CliError::Objective(_) | CliError::Protocol(_) => 3,
            CliError::Io(_) | CliError::AuditFailed => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "treeucb", version, about = "Adaptive-partition Lipschitz bandits")]
#[command(after_help = "Every run flag may also be set with TREEUCB_<FLAG> (upper case, dashes as \
underscores, e.g. TREEUCB_NOISE_SEED) or as `flag = value` in a --config file. \
Flags win over the environment, which wins over the file.\n\n\
Exit codes: 0 success, 1 audit failure or i/o error, 2 invalid configuration or trace, \
3 objective or protocol failure.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a bandit against a built-in objective
    Run(RunArgs),
    /// Serve ask/tell lines on stdin/stdout for an external objective
    Serve(RunArgs),
    /// Check the point-scattering inequalities on a trace
    Audit(AuditArgs),
    /// Posterior means of the hard and softened box kernels on a 1-D grid
    GpDemo(gp_demo::GpDemoArgs),
    /// Independent runs over a range of seeds, in parallel
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[arg(long, value_name = "FILE")]
    pub trace: PathBuf,
    #[arg(long, value_name = "LIST", default_value = "0.3,0.5,0.9")]
    pub alpha: String,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Inclusive range `a..b` or a comma list
    #[arg(long, value_name = "SEEDS", default_value = "0..9")]
    pub seeds: String,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub rounds: u64,
    pub partition_size: usize,
    pub avg_regret: Option<f64>,
    pub best_so_far: Option<f64>,
    pub audit_pass: bool,
    pub out: PathBuf,
}

fn summarize(session: &Session, audit_pass: bool) -> RunSummary {
    let r = &session.regret;
    RunSummary {
        seed: session.config.seed,
        rounds: session.engine().rounds(),
        partition_size: session.engine().partition().len(),
        avg_regret: r.avg.last().copied(),
        best_so_far: r.best_so_far.last().copied(),
        audit_pass,
        out: session.config.out.clone(),
    }
}

/// Runs to completion in process.
pub fn run(config: RunConfig) -> Result<RunSummary, CliError> {
    if matches!(config.objective, config::ObjectiveSpec::External) {
        return Err(CliError::Config("an external objective is driven with `serve`, not `run`".into()));
    }
    let mut session = Session::new(config)?;
    match session.run_in_process().and_then(|_| session.finish()) {
        Ok(pass) => Ok(summarize(&session, pass)),
        Err(e) => {
            let _ = session.abort();
            Err(e)
        }
    }
}

/// Runs an ask/tell session over the given streams.
pub fn serve<R: std::io::BufRead, W: std::io::Write>(
    config: RunConfig,
    input: &mut R,
    output: &mut W,
) -> Result<RunSummary, CliError> {
    if !matches!(config.objective, config::ObjectiveSpec::External) {
        return Err(CliError::Config("`serve` needs --objective external".into()));
    }
    let mut session = Session::new(config)?;
    let pass = serve::serve(&mut session, input, output)?;
    Ok(summarize(&session, pass))
}

pub fn parse_alphas(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Config(format!("invalid alpha '{v}': {e}"))))
        .collect()
}

pub fn audit_trace(args: &AuditArgs) -> Result<treeucb_core::audit::AuditReport, CliError> {
    let alphas = parse_alphas(&args.alpha)?;
    trace::Trace::read(&args.trace)?.audit(&alphas)
}

/// Parses `a..b` (inclusive) or `s1,s2,...`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("invalid seed list '{text}' (expected a..b or a comma list)"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

/// Runs one seed per thread, at most as many at once as there are cores.
pub fn sweep(args: &SweepArgs) -> Result<Vec<Result<RunSummary, CliError>>, CliError> {
    let seeds = parse_seeds(&args.seeds)?;
    let base = RunConfig::from_args(&args.run)?;
    let configs: Vec<RunConfig> = seeds
        .iter()
        .map(|&seed| {
            let mut run = args.run.clone();
            run.seed = Some(seed.to_string());
            run.out = Some(base.out.join(format!("seed-{seed}")).display().to_string());
            RunConfig::from_args(&run)
        })
        .collect::<Result<_, _>>()?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut results = Vec::with_capacity(configs.len());
    for chunk in configs.chunks(workers) {
        let chunk_results: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk.iter().cloned().map(|c| scope.spawn(move || run(c))).collect();
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
        });
        results.extend(chunk_results);
    }
    Ok(results)
}

pub fn sweep_table(results: &[Result<RunSummary, CliError>], seeds: &[u64]) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
    let mut out = String::from("seed,rounds,partition_size,avg_regret,best_so_far,audit\n");
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(s) => out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.seed,
                s.rounds,
                s.partition_size,
                fmt(s.avg_regret),
                fmt(s.best_so_far),
                if s.audit_pass { "PASS" } else { "FAIL" }
            )),
            Err(e) => out.push_str(&format!("{seed},-,-,-,-,error: {e}\n")),
        }
    }
    out
}
