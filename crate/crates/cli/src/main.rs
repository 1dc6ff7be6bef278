//! `guinav`: data validation, filtering, auditing, synthesis, evaluation and
//! reward tooling for GUI agents.
//!
//! Exit codes: 0 success, 1 validation or evaluation failure (and runtime
//! errors), 2 usage errors.

mod config;
mod data;
mod demo;
mod score;
mod synth;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, GlobalConfig};
use guinav::mllm::HttpChatClient;

#[derive(Debug, Parser)]
#[command(name = "guinav", version, about = "GUI agent data and evaluation toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML config with optional `seed`, `jobs`, `offline`, `[reward]`, `[endpoint]` and `[filter]` entries
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every stochastic choice (default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Upper bound on concurrent work items and in-flight model requests (default 4)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Use deterministic offline stubs instead of the chat endpoint
    #[arg(long, global = true)]
    offline: bool,
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a trajectory JSONL file and print per-line diagnostics
    Validate(data::ValidateArgs),
    /// Apply the minimum-length and repetition filters
    Filter(data::FilterArgs),
    /// Judge whether each trajectory completes its goal
    Audit(data::AuditArgs),
    /// Summarize a trajectory file
    Stats(data::StatsArgs),
    /// Explore a simulated environment depth-first
    Explore(synth::ExploreArgs),
    /// Turn an exploration into described trajectories
    Synthesize(synth::SynthesizeArgs),
    /// Generate taxonomy-guided tasks and roll them out
    Taskgen(synth::TaskgenArgs),
    /// Offline benchmark metrics
    #[command(subcommand)]
    Eval(score::EvalCommand),
    /// Print a reward breakdown for one response
    #[command(subcommand)]
    Reward(score::RewardCommand),
    /// Write seeded noisy-oracle predictions for a benchmark file
    Predict(score::PredictArgs),
    /// Run a seeded toy bandit through the reward engine and GRPO objective
    GrpoDemo(demo::GrpoDemoArgs),
}

/// Usage problems found after argument parsing; exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Outcome of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

/// Writes `text` to `path`, or stdout when `None`.
pub fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("records serialize");
    s.push('\n');
    s
}

pub fn http_client(g: &GlobalConfig) -> anyhow::Result<Arc<HttpChatClient>> {
    let mut cfg = g.endpoint.clone();
    cfg.parallelism = cfg.parallelism.min(g.jobs).max(1);
    Ok(Arc::new(HttpChatClient::new(cfg)?))
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let file = cli
        .global
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()?;
    let g = GlobalConfig::resolve(file, cli.global.seed, cli.global.jobs, cli.global.offline);
    log::debug!("resolved config: {g:?}");
    match cli.command {
        Command::Validate(a) => data::validate(&a),
        Command::Filter(a) => data::filter(&a, &g),
        Command::Audit(a) => data::audit(&a, &g),
        Command::Stats(a) => data::stats(&a),
        Command::Explore(a) => synth::explore(&a),
        Command::Synthesize(a) => synth::synthesize(&a, &g),
        Command::Taskgen(a) => synth::taskgen(&a, &g),
        Command::Eval(c) => score::eval(&c, &g),
        Command::Reward(c) => score::reward(&c, &g),
        Command::Predict(a) => score::predict(&a, &g),
        Command::GrpoDemo(a) => demo::grpo_demo(&a, &g),
    }
}

/// The error chain joined with ": ", skipping causes the previous message
/// already ends with.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.ends_with(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
