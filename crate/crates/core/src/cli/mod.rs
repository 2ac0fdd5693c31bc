//! The `devforge` command line.

mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{load_config, ConfigError, RunConfig};

pub use stages::{Layout, StageError};

/// Exit status for a completed run.
pub const EXIT_OK: i32 = 0;
/// Exit status when a stage fails.
pub const EXIT_STAGE: i32 = 1;
/// Exit status for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "devforge", version, about = "Developer expertise embeddings and role classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration layered over the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory of offline evidence (developers, repos, issues, commits).
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// Seed for splitting, training and classifiers; overrides the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Training threads; overrides the config
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Single-threaded training so repeated runs match bit for bit.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Root directory for every stage's outputs.
    #[arg(long, global = true, default_value = "devforge-out")]
    out: PathBuf,
    /// Ignore unknown configuration keys instead of failing.
    #[arg(long, global = true)]
    lax: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Collect repositories, issues and commit snapshots per developer.
    Mine {
        /// Continue from the checkpoint of an interrupted session.
        #[arg(long)]
        resume: bool,
    },
    /// Build per-developer documents and import counts.
    Ingest,
    /// Split developers and train the three embedding models.
    Train,
    /// Write Repos, Issues and APIs vectors.
    Embed,
    /// Concatenate the three vectors into RIAs vectors.
    Concat,
    /// Reduce RIAs vectors to each configured dimension.
    Pca,
    /// Fit classifiers and write test predictions.
    Classify,
    /// Fit classifiers and write the metrics report.
    Evaluate,
    /// Role-similarity matrices per vector set.
    Analyze,
    /// Every stage from mining to analysis.
    All,
    /// Print the imports found in one source file.
    Imports {
        /// Language name; detected from the extension when omitted.
        #[arg(long)]
        lang: Option<String>,
        /// Source file or notebook
        file: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(StageError::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_STAGE
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path, !cli.lax)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if cli.deterministic {
        cfg.workers = 1;
    }
    cfg.propagate();
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), StageError> {
    if let Command::Imports { lang, file } = &cli.command {
        return stages::print_imports(lang.as_deref(), file);
    }
    let cfg = resolve_config(&cli)?;
    let layout = Layout::new(&cli.out, &cfg);
    layout.write_resolved_config(&cfg)?;
    let fixtures = cli.fixtures.as_deref();
    match cli.command {
        Command::Mine { resume } => stages::mine(&layout, &cfg, fixtures, resume),
        Command::Ingest => stages::ingest(&layout),
        Command::Train => stages::train(&layout, &cfg),
        Command::Embed => stages::embed(&layout, &cfg),
        Command::Concat => stages::concat(&layout),
        Command::Pca => stages::pca(&layout, &cfg),
        Command::Classify => stages::classify(&layout, &cfg).map(|_| ()),
        Command::Evaluate => stages::evaluate(&layout, &cfg),
        Command::Analyze => stages::analyze(&layout),
        Command::All => {
            stages::mine(&layout, &cfg, fixtures, false)?;
            stages::ingest(&layout)?;
            stages::train(&layout, &cfg)?;
            stages::embed(&layout, &cfg)?;
            stages::concat(&layout)?;
            stages::pca(&layout, &cfg)?;
            stages::evaluate(&layout, &cfg)?;
            stages::analyze(&layout)
        }
        Command::Imports { .. } => unreachable!("handled above"),
    }
}
