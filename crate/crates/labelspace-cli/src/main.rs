//! `labelspace`: train, run, and inspect the image-conditioned label-space
//! transformation model.
//!
//! Every command resolves its settings (flags over config file over
//! defaults), digests its inputs, and writes exactly one manifest recording
//! the resolved run; reruns with an equal manifest produce byte-identical
//! outputs. Exit codes: 0 success, 1 data error, 2 usage error, 3 tolerance
//! failure.

mod cfgfile;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
    Tolerance(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<labelspace::Error> for CliError {
    fn from(err: labelspace::Error) -> Self {
        CliError::Data(err.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Data(err)
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser)]
#[command(name = "labelspace", version, about = "Image-conditioned label-space transformation model")]
struct Cli {
    /// Worker threads for parallel sections: 0 = all cores, 1 = sequential.
    /// Never changes any output byte.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic planted-structure dataset with its embeddings
    /// and ground-truth map.
    GenSynthetic(commands::gen::GenArgs),
    /// Train a model; writes a checkpoint and a per-epoch report CSV.
    Train(commands::train::TrainArgs),
    /// Rank labels for feature rows from a trained checkpoint.
    Predict(commands::predict::PredictArgs),
    /// Evaluate a checkpoint on a dataset with the multilabel metric suite.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Committee analysis: per-row voting metrics and Jaccard statistics.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Train and evaluate one model per transform dimension.
    SweepK(commands::sweep::SweepArgs),
    /// Verify analytic gradients against central finite differences.
    GradCheck(commands::gradcheck::GradCheckArgs),
}

/// Decides whether parallel sections run on rayon and sizes the pool.
fn configure_threads(threads: usize) -> bool {
    if threads == 1 {
        return false;
    }
    if threads > 1 {
        // Ignore the error: the global pool can only be built once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    true
}

fn run(cli: Cli) -> CliResult<()> {
    let parallel = configure_threads(cli.threads);
    let ctx = commands::Context { parallel };
    match cli.command {
        Command::GenSynthetic(args) => commands::gen::run(args, &ctx),
        Command::Train(args) => commands::train::run(args, &ctx),
        Command::Predict(args) => commands::predict::run(args, &ctx),
        Command::Evaluate(args) => commands::evaluate::run(args, &ctx),
        Command::Analyze(args) => commands::analyze::run(args, &ctx),
        Command::SweepK(args) => commands::sweep::run(args, &ctx),
        Command::GradCheck(args) => commands::gradcheck::run(args, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Tolerance(msg)) => {
            eprintln!("tolerance failure: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Training knobs shared by `train` and `sweep-k`; unset flags fall back to
/// config-file values, then to built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct TrainKnobs {
    /// Hinge margin each negative must clear.
    #[arg(long)]
    margin: Option<f64>,
    /// Negatives sampled per instance visit.
    #[arg(long)]
    negatives: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    /// Adam epsilon.
    #[arg(long)]
    eps: Option<f64>,
    /// Hidden layer widths, comma-separated (e.g. 64,64). "none" for a pure
    /// affine encoder.
    #[arg(long)]
    hidden: Option<String>,
    /// Weight initialization scale.
    #[arg(long)]
    init_scale: Option<f64>,
    /// Per-epoch multiplicative learning-rate decay (1 = off).
    #[arg(long)]
    decay: Option<f64>,
}
