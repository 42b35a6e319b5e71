//! Command-line driver for the priming experiments.
//!
//! Exit codes: 0 success, 2 usage error, 3 missing file / io error,
//! 4 configuration contradiction, 1 anything else. Errors print one
//! machine-parsable line: `error: <kind>: <detail>`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use primelm::config::RunConfig;
use primelm::pipeline;
use primelm::Error;

#[derive(Parser)]
#[command(
    name = "primelm",
    about = "Train small language models, prime them on templated sentence types, and measure adaptation effects",
    version
)]
struct Cli {
    /// Path to a key=value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for all artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master random seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of model instances to train on disjoint splits
    #[arg(long, global = true)]
    models: Option<usize>,

    /// Model family: ngram or lstm
    #[arg(long, global = true)]
    family: Option<String>,

    /// N-gram order
    #[arg(long, global = true)]
    order: Option<usize>,

    /// Kneser-Ney discount
    #[arg(long, global = true)]
    discount: Option<f64>,

    /// Scramble the adaptation sets before adapting (test sets stay intact)
    #[arg(long, global = true)]
    scramble_adaptation: bool,

    /// Corpus source: "synthetic" or a path to WikiText-format plain text
    #[arg(long, global = true)]
    corpus: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the stimulus bundle (adaptation + test sets for all 7 types)
    GenStimuli,
    /// Train k Kneser-Ney models on disjoint corpus splits
    TrainNgram,
    /// Train k LSTM models on disjoint corpus splits
    TrainLstm,
    /// Adapt every model on every sentence type and score all test sets
    RunPriming,
    /// Turn results.tsv into analysis.tsv (contrasts + significance)
    Analyze,
    /// Render the SVG figures from analysis.tsv
    Plot,
    /// Run the whole chain: stimuli, training, priming, analysis, figures
    All,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(models) = cli.models {
        cfg.models = models;
    }
    if let Some(family) = &cli.family {
        cfg.set("family", family)?;
    }
    if let Some(order) = cli.order {
        cfg.order = order;
    }
    if let Some(discount) = cli.discount {
        cfg.discount = discount;
    }
    if cli.scramble_adaptation {
        cfg.scramble_adaptation = true;
    }
    if let Some(corpus) = &cli.corpus {
        cfg.corpus = corpus.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = resolve_config(cli)?;
    match cli.command {
        Command::GenStimuli => pipeline::cmd_gen_stimuli(&cfg),
        Command::TrainNgram => pipeline::cmd_train_ngram(&cfg),
        Command::TrainLstm => pipeline::cmd_train_lstm(&cfg),
        Command::RunPriming => pipeline::cmd_run_priming(&cfg),
        Command::Analyze => pipeline::cmd_analyze(&cfg),
        Command::Plot => pipeline::cmd_plot(&cfg),
        Command::All => pipeline::cmd_all(&cfg),
    }
}

fn error_kind_and_code(err: &Error) -> (&'static str, u8) {
    match err {
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => ("missing-file", 3),
        Error::Io(_) => ("io", 3),
        Error::Config(_) => ("config", 4),
        Error::Parse { .. } => ("parse", 1),
        _ => ("run", 1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = error_kind_and_code(&err);
            let msg = err.to_string().replace('\n', " ");
            eprintln!("error: {kind}: {msg}");
            ExitCode::from(code)
        }
    }
}
