mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Contextual WL kernels, multiple kernel learning and malice localization
/// over multi-view program graphs.
#[derive(Debug, Parser)]
#[command(name = "cwlmkl", version, about)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with planted malicious motifs.
    Gen(GenArgs),
    /// Train a model on a labeled dataset.
    Train(TrainArgs),
    /// Write `id,sign,raw` predictions for every sample.
    Predict(PredictArgs),
    /// Score nodes, methods and classes of every sample.
    Localize(LocalizeArgs),
    /// Detection and localization metrics.
    Eval(EvalArgs),
    /// Gram matrix of one view as CSV.
    Kernel(KernelArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator config (JSON); built-in defaults when omitted.
    config: Option<PathBuf>,
    /// Built-in preset used when no config file is given.
    #[arg(long, value_enum, default_value_t = commands::Preset::Default, conflicts_with = "config")]
    preset: commands::Preset,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    dataset: PathBuf,
    #[arg(short, long = "model")]
    model: PathBuf,
    /// Relabeling height.
    #[arg(long, default_value_t = 2)]
    h: usize,
    /// Features kept per view by chi-squared selection.
    #[arg(long, default_value_t = 5000, conflicts_with = "no_select")]
    k_select: usize,
    /// Keep every feature.
    #[arg(long)]
    no_select: bool,
    /// SVM box constraint.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Norm exponent of the kernel-weight regularizer.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Strength of the kernel-weight regularizer.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 50)]
    max_outer_iters: usize,
    /// Fix kernel weights at 1/|views|.
    #[arg(long)]
    uniform: bool,
    /// Training report path (default: `<model>.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write vocabularies, masks and embeddings here.
    #[arg(long)]
    export_dir: Option<PathBuf>,
    /// Exit with status 3 and write nothing if training did not converge.
    #[arg(long)]
    require_convergence: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    model: PathBuf,
    dataset: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    model: PathBuf,
    dataset: PathBuf,
    #[arg(short, long)]
    out_dir: PathBuf,
    /// Classes listed per sample in the corpus CSV.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions CSV from `predict`.
    predictions: PathBuf,
    /// `reports.jsonl` from `localize`.
    reports: PathBuf,
    dataset: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    dataset: PathBuf,
    #[arg(long)]
    view: String,
    #[arg(long, default_value_t = 2)]
    h: usize,
    /// Use raw counts instead of unit-normalized embeddings.
    #[arg(long)]
    unnormalized: bool,
    #[arg(short, long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Gen(a) => commands::gen(a, cli.manifest.as_deref()),
        Command::Train(a) => commands::train(a, cli.manifest.as_deref()),
        Command::Predict(a) => commands::predict(a, cli.manifest.as_deref()),
        Command::Localize(a) => commands::localize(a, cli.manifest.as_deref()),
        Command::Eval(a) => commands::eval(a, cli.manifest.as_deref()),
        Command::Kernel(a) => commands::kernel(a, cli.manifest.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
