//! Command line front end: simulate a TSCH network, train per-link
//! predictors, evaluate them and assemble per-level reports.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub mod evaluate;
pub mod manifest;
pub mod pipeline;
pub mod profile;
pub mod report;
pub mod simulate;
pub mod train;

/// Environment variable holding the default output root.
pub const OUT_ENV: &str = "TSCHML_OUT";
const DEFAULT_OUT_ROOT: &str = "runs";

/// A failed command, tagged with the process exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, missing or invalid configuration. Exit code 2.
    Usage(anyhow::Error),
    /// Anything that went wrong while running a stage. Exit code 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error())
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Parser)]
#[command(name = "tschml", version, about = "Idle-listening prediction for TSCH networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a network and write one trace file per scheduled link.
    Simulate(simulate::SimulateArgs),
    /// Train a predictor on the leading part of a link trace.
    Train(train::TrainArgs),
    /// Evaluate a trained predictor on the trailing part of a link trace.
    Evaluate(evaluate::EvaluateArgs),
    /// Simulate, train and evaluate a set of links and report per level.
    Pipeline(pipeline::PipelineArgs),
}

/// How a trace is cut into a leading training segment and a trailing test
/// segment. Shared by `train`, `evaluate` and `pipeline` so that all of them
/// agree on the boundary.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SplitArgs {
    /// Samples in the training segment [default: train fraction of the trace]
    #[arg(long)]
    pub train_samples: Option<usize>,
    /// Fraction of the trace used for training when --train-samples is absent
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Samples in the test segment [default: everything after training]
    #[arg(long)]
    pub test_samples: Option<usize>,
}

impl Default for SplitArgs {
    fn default() -> Self {
        SplitArgs {
            train_samples: None,
            train_fraction: 0.8,
            test_samples: None,
        }
    }
}

impl SplitArgs {
    /// `(train_len, test_len)` for a trace of `n` samples.
    pub fn resolve(&self, n: usize) -> CmdResult<(usize, usize)> {
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return Err(Failure::usage(format!(
                "--train-fraction must lie in [0, 1], got {}",
                self.train_fraction
            )));
        }
        let train = self
            .train_samples
            .unwrap_or_else(|| (n as f64 * self.train_fraction).floor() as usize);
        if train > n {
            return Err(Failure::Runtime(anyhow::anyhow!(
                "training segment of {train} samples exceeds the trace length {n}"
            )));
        }
        let test = self.test_samples.unwrap_or(n - train);
        if train + test > n {
            return Err(Failure::Runtime(anyhow::anyhow!(
                "training ({train}) plus test ({test}) samples exceed the trace length {n}"
            )));
        }
        Ok((train, test))
    }
}

/// Output root: `$TSCHML_OUT` if set, else `runs`.
pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
}

pub fn execute(cli: Cli) -> CmdResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate::run(&a).map(|_| ()),
        Command::Train(a) => train::run(&a).map(|_| ()),
        Command::Evaluate(a) => evaluate::run(&a).map(|_| ()),
        Command::Pipeline(a) => pipeline::run(&a).map(|_| ()),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code; messages go to stdout and stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
