//! `biovolt` command-line front end.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage error, 3 configuration
//! error, 4 I/O error, 5 numerical failure.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Other,
    Config,
    Io,
    Numerical,
}

impl FailureKind {
    pub fn code(self) -> u8 {
        match self {
            FailureKind::Other => 1,
            FailureKind::Config => 3,
            FailureKind::Io => 4,
            FailureKind::Numerical => 5,
        }
    }
}

/// An error tagged with the exit code it should produce.
#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub source: anyhow::Error,
}

impl Failure {
    pub fn config(e: impl Into<anyhow::Error>) -> anyhow::Error {
        Failure {
            kind: FailureKind::Config,
            source: e.into(),
        }
        .into()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl std::error::Error for Failure {}

fn classify(err: &anyhow::Error) -> FailureKind {
    use biovolt::causal::CausalError;
    use biovolt::env::EnvError;
    use biovolt::learner::LearnerError;
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.kind;
        }
        if let Some(e) = cause.downcast_ref::<LearnerError>() {
            return match e {
                e if e.is_numerical() => FailureKind::Numerical,
                LearnerError::Config(_) => FailureKind::Config,
                LearnerError::Io(_) | LearnerError::Checkpoint(_) => FailureKind::Io,
                LearnerError::Env(inner) => env_kind(inner),
                _ => FailureKind::Other,
            };
        }
        if let Some(e) = cause.downcast_ref::<EnvError>() {
            return env_kind(e);
        }
        if cause.downcast_ref::<CausalError>().is_some() {
            return FailureKind::Config;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return FailureKind::Io;
        }
    }
    FailureKind::Other
}

fn env_kind(e: &biovolt::env::EnvError) -> FailureKind {
    use biovolt::env::EnvError;
    match e {
        e if e.is_numerical() => FailureKind::Numerical,
        EnvError::Io(_) => FailureKind::Io,
        EnvError::Config(_) | EnvError::ActionOutOfRange { .. } | EnvError::ActionDimension { .. } => {
            FailureKind::Config
        }
        _ => FailureKind::Other,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "biovolt",
    version,
    about = "Bioelectric tissue simulator, trainer and causal analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Each one is also reachable as a
/// dotted config key (`run.seed`, `run.out`, ...).
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in scenario name or a TOML scenario file.
    #[arg(long)]
    scenario: Option<String>,
    /// Run configuration file (TOML with [run], [scenario] and [train] tables).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; a random one is drawn and recorded when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-path override, e.g. `--set train.steps=5000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Write a full tissue snapshot every k steps.
    #[arg(long, value_name = "K")]
    snapshots: Option<usize>,
    /// Serial execution only.
    #[arg(long)]
    deterministic: bool,
    /// No progress output on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run episodes under a fixed policy and write episode logs.
    Simulate(commands::SimulateArgs),
    /// Train a policy.
    Train(commands::TrainArgs),
    /// Evaluate a checkpoint on the evaluation seeds.
    Eval(commands::EvalArgs),
    /// Back-door adjustment over episode logs.
    Causal(commands::CausalArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Causal(a) => commands::causal(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = classify(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(kind.code())
        }
    }
}
