use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::LazyLock;

use clap::{Parser, Subcommand};
use tweetlens::config::PipelineConfig;
use tweetlens::pipeline::{Pipeline, Stage};
use tweetlens::Error;

const THREADS_ENV: &str = "TWEETLENS_THREADS";

static AFTER_HELP: LazyLock<String> = LazyLock::new(|| {
    format!(
        "Exit codes: 0 success, 1 usage or config error, 2 data error, 3 internal error.\n\
         Set {THREADS_ENV}=N to cap worker threads.\n\n\
         Config fields and defaults (override with --set section.key=value):\n{}",
        PipelineConfig::reference()
    )
});

#[derive(Debug, Parser)]
#[command(name = "tweetlens", version, about = "Topic modeling and opinion mining for tweet corpora")]
#[command(after_help = AFTER_HELP.as_str())]
struct Cli {
    /// TOML config file; relative paths inside it resolve against its directory.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a config field, e.g. `--set lda.k=7`. Repeatable; flags win over the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load the corpus and filter it by hashtag.
    Ingest,
    /// Tokenize, remove stopwords and lemmatize.
    Normalize,
    /// Detect repeated texts and prune copies.
    Dedup,
    /// Train the topic model.
    Lda,
    /// Train skip-gram embeddings.
    Embed,
    /// Score topic coherence.
    Coherence,
    /// Rank the most frequent polar words.
    Sentiment,
    /// Compute opinion/topic affinity and the intertopic map.
    Analyze,
    /// Write the report bundle.
    Report,
    /// Run every stage in order.
    Pipeline,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        Some(match self {
            Command::Ingest => Stage::Ingest,
            Command::Normalize => Stage::Normalize,
            Command::Dedup => Stage::Dedup,
            Command::Lda => Stage::Lda,
            Command::Embed => Stage::Embed,
            Command::Coherence => Stage::Coherence,
            Command::Sentiment => Stage::Sentiment,
            Command::Analyze => Stage::Analyze,
            Command::Report => Stage::Report,
            Command::Pipeline | Command::ShowConfig => return None,
        })
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config {
            field: THREADS_ENV.into(),
            message: format!("expected a positive integer, got {raw:?}"),
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("cannot size the thread pool: {e}")))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    match &cli.config {
        Some(path) => PipelineConfig::load(path, &cli.overrides),
        None => PipelineConfig::from_toml("", &cli.overrides),
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    configure_threads()?;
    let config = load_config(cli)?;
    if let Command::ShowConfig = cli.command {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let pipeline = Pipeline::new(config)?;
    match cli.command.stage() {
        Some(stage) => pipeline.run(stage),
        None => pipeline.run_all(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("error: internal failure (panic); partial artifacts are kept");
            ExitCode::from(3)
        }
    }
}
