//! `vdmkit`: distribution distances between sets of video features.
//!
//! Every subcommand prints one JSON document on stdout. Logs, including the
//! fully resolved configuration, go to stderr. Exit status is 0 on success,
//! 2 on a usage error and 1 when the computation itself fails.

mod commands;
mod config;
mod io;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use commands::*;

/// Bad arguments or configuration, reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Version tag of every JSON document the tool emits.
pub const SCHEMA_VERSION: &str = "v1";

#[derive(Parser, Debug)]
#[command(name = "vdmkit", version, about = "Distribution distances between video feature sets")]
struct Cli {
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, env = "VDMKIT_THREADS")]
    threads: Option<usize>,

    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distance between two feature sets.
    Dist(DistArgs),
    /// Smallest sample size whose estimate stays within a margin of the target.
    Converge(ProtocolArgs),
    /// Relative change of the estimate against the target across sample sizes.
    RateCurve(ProtocolArgs),
    /// One metric against a series of increasingly perturbed sets.
    Sweep(SweepArgs),
    /// Multivariate normality tests.
    Normality(NormalityArgs),
    /// Fit or apply a PCA, LDA or autoencoder reduction.
    Reduce(ReduceArgs),
    /// Fit a Gaussian mixture model.
    FitGmm(FitGmmArgs),
    /// Agreement between metric scores and pairwise human preferences.
    Align(AlignArgs),
    /// Spearman rank correlation.
    Rankcorr(RankcorrArgs),
    /// Write a synthetic feature set.
    Synth(SynthArgs),
    /// Extractor dimensions and every default constant.
    Info(InfoArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run() -> anyhow::Result<()> {
    let root = Cli::command();
    let matches = root.clone().get_matches();
    let cli = Cli::from_arg_matches(&matches).map_err(|e| UsageError(e.to_string()))?;
    let table = match &cli.config {
        Some(p) => config::load(p)?,
        None => toml::Table::new(),
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match table.get("threads") {
            Some(v) => Some(
                v.as_integer()
                    .and_then(|t| usize::try_from(t).ok())
                    .ok_or_else(|| UsageError("config 'threads' must be a non-negative integer".into()))?,
            ),
            None => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    log::info!("threads: {}", rayon::current_num_threads());

    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let cmd = root
        .find_subcommand(name)
        .expect("matched subcommand exists")
        .clone();
    let ctx = Ctx {
        cmd: &cmd,
        matches: sub,
        table: &table,
    };
    match cli.command {
        Command::Dist(a) => ctx.run(a, dist),
        Command::Converge(a) => ctx.run(a, converge),
        Command::RateCurve(a) => ctx.run(a, rate_curve),
        Command::Sweep(a) => ctx.run(a, sweep),
        Command::Normality(a) => ctx.run(a, normality),
        Command::Reduce(a) => ctx.run(a, reduce),
        Command::FitGmm(a) => ctx.run(a, fit_gmm),
        Command::Align(a) => ctx.run(a, align),
        Command::Rankcorr(a) => ctx.run(a, rankcorr),
        Command::Synth(a) => ctx.run(a, synth),
        Command::Info(a) => ctx.run(a, info),
    }
}

struct Ctx<'a> {
    cmd: &'a clap::Command,
    matches: &'a ArgMatches,
    table: &'a toml::Table,
}

impl Ctx<'_> {
    /// Merges the config file into `args`, logs the result, runs the command
    /// and prints the JSON envelope.
    fn run<A, F>(&self, args: A, f: F) -> anyhow::Result<()>
    where
        A: Serialize + DeserializeOwned,
        F: FnOnce(&A) -> anyhow::Result<Value>,
    {
        let args = config::merge(args, self.cmd, self.matches, self.table)?;
        let resolved = serde_json::to_value(&args)?;
        let name = self.cmd.get_name();
        log::info!("{name} config: {}", serde_json::to_string(&resolved)?);
        if let Some(seed) = resolved.get("seed") {
            log::info!("seed: {seed}");
        }
        let start = Instant::now();
        let result = f(&args)?;
        let doc = json!({
            "schema": format!("vdmkit/{name}/{SCHEMA_VERSION}"),
            "command": name,
            "config": resolved,
            "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
            "result": result,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        Ok(())
    }
}
