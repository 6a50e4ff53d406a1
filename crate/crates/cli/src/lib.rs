//! Command-line pipeline: ingest, label, featurize, embed, train, evaluate,
//! compare, order and report. Stages exchange files only.

pub mod config;
pub mod output;
mod stages;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, PipelineConfig};

/// Bad invocation or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_STAGE_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "review-radar",
    version,
    about = "Review hot-spot labeling, prediction and file ordering"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Corpus JSONL file.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// JSON config file (falls back to $REVIEW_RADAR_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Target label: commented, revised or hot_spot.
    #[arg(long, global = true)]
    pub label: Option<String>,
    /// Embedding spec `<text>+<streams>+<features>`, e.g. `bow+add_remove+all`.
    #[arg(long, global = true)]
    pub spec: Option<String>,
    /// Split scheme: ratio or sliding.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Seeds as a list or range, e.g. `1,2,3` or `1..5`.
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Precomputed per-file vectors for the `external` text kind.
    #[arg(long, global = true)]
    pub external: Option<PathBuf>,
    /// Dataset name used in reports.
    #[arg(long, global = true)]
    pub dataset: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and normalize a corpus, or build one from raw diffs.
    Ingest {
        /// Directory of unified-diff files named by the metadata.
        #[arg(long, requires = "metadata")]
        diffs: Option<PathBuf>,
        /// Patch metadata JSONL referencing the diff files.
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Write commented / revised / hot-spot labels and a corpus summary.
    Label,
    /// Write the 37 review-process features of every changed file.
    Featurize,
    /// Fit text models on the first training partition and embed every file.
    Embed,
    /// Train one model variant and calibrate its threshold.
    Train {
        /// rf, rfs, nb or nbs.
        #[arg(long, default_value = "rf")]
        variant: String,
        /// Seed; defaults to the first configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every variant and seed under the split scheme.
    Evaluate,
    /// Paired tests between two setups' evaluation reports.
    Compare {
        /// Reports JSONL of setup A.
        #[arg(long = "reports-a")]
        reports_a: PathBuf,
        /// Reports JSONL of setup B.
        #[arg(long = "reports-b")]
        reports_b: PathBuf,
        /// open, closed or all.
        #[arg(long, default_value = "all")]
        grouping: String,
        /// Comma-separated datasets in pairing order; defaults to all, sorted.
        #[arg(long)]
        datasets: Option<String>,
    },
    /// Re-order test-partition files by a trained model's scores.
    Order {
        /// Model bundle written by `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Summarize evaluation reports per variant.
    Report {
        /// Reports JSONL; defaults to `<out>/reports.jsonl`.
        #[arg(long)]
        reports: Option<PathBuf>,
    },
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            corpus: self.corpus.clone(),
            dataset: self.dataset.clone(),
            external_vectors: self.external.clone(),
            label: self.label.clone(),
            spec: self.spec.clone(),
            scheme: self.scheme.clone(),
            seeds: self.seeds.clone(),
            out: self.out.clone(),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = PipelineConfig::resolve(cli.common.config.as_deref(), &cli.common.overrides())?;
    match cli.command {
        Command::Ingest { diffs, metadata } => stages::ingest(&cfg, diffs.as_deref(), metadata.as_deref()),
        Command::Label => stages::label(&cfg),
        Command::Featurize => stages::featurize(&cfg),
        Command::Embed => stages::embed(&cfg),
        Command::Train { variant, seed } => {
            let variant = variant.parse().map_err(|e| UsageError(format!("{e}")))?;
            stages::train(&cfg, variant, seed.unwrap_or(cfg.seeds[0]))
        }
        Command::Evaluate => stages::evaluate(&cfg),
        Command::Compare {
            reports_a,
            reports_b,
            grouping,
            datasets,
        } => {
            let grouping = grouping.parse().map_err(|e| UsageError(format!("{e}")))?;
            let datasets = datasets.map(|d| d.split(',').map(|s| s.trim().to_string()).collect());
            stages::compare(&cfg, &reports_a, &reports_b, grouping, datasets)
        }
        Command::Order { model } => stages::order(&cfg, &model),
        Command::Report { reports } => {
            let path = reports.unwrap_or_else(|| cfg.out.join("reports.jsonl"));
            stages::report(&cfg, &path)
        }
    }
}

/// Parses `args` (program name first) and runs one stage. Returns the exit
/// status: 0 on success, 1 on a stage error, 2 on a usage error.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_STAGE_ERROR
        }
    }
}
