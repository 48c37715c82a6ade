use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod artifacts;
mod commands;
mod config;
mod error;

use config::{Loaded, RegimeChoice};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "semiroute", version, about = "Domain-routed translation pipeline")]
struct Cli {
    /// Pipeline config (JSON).
    #[arg(short, long, global = true, default_value = "semiroute.json")]
    config: PathBuf,

    /// Artifact directory; overrides `work_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Read the configured sources into corpus.jsonl.
    Ingest,
    /// Print a per-corpus size summary.
    Stats {
        /// Records to summarize; defaults to corpus.jsonl.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Group labeled records by domain instead of corpus.
        #[arg(long)]
        by_domain: bool,
        #[arg(long)]
        json: bool,
    },
    /// Assign a domain to every pair.
    Label {
        #[arg(long, value_enum)]
        regime: Option<RegimeChoice>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Deduplicate, line-split and split each domain into train and eval.
    Split {
        /// Write one combined training file instead of one per domain.
        #[arg(long)]
        merge_domains: bool,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Build the centroid index from the training split.
    Centroids {
        /// Training files; defaults to those listed in split.json.
        #[arg(long = "train")]
        train: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Route each stdin line and print one JSON decision per line.
    Route {
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Run the translation gateway.
    Serve {
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Pair text blocks of two language versions of a document.
    AlignBlocks {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Origin name for the mined pairs.
        #[arg(long, default_value = "blocks")]
        origin: String,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score hypotheses per domain.
    Evaluate {
        /// `NAME=PATH` or `PATH`; repeat to compare systems. A `.json` file is
        /// an object from source sentence to hypothesis; anything else has one
        /// hypothesis per line, aligned with the eval set.
        #[arg(long = "hypotheses", required = true)]
        hypotheses: Vec<String>,
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<commands::evaluate::ModeArg>,
        #[arg(long)]
        add_one: bool,
        #[arg(long)]
        index: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Loaded::from_path(&cli.config, cli.out.as_deref())?;
    match cli.command {
        Command::Ingest => commands::corpus::ingest(&ctx),
        Command::Stats {
            input,
            by_domain,
            json,
        } => commands::corpus::stats(&ctx, input, by_domain, json),
        Command::Label {
            regime,
            threshold,
            input,
        } => commands::label::label(&ctx, regime, threshold, input),
        Command::Split { merge_domains, input } => commands::split::split(&ctx, merge_domains, input),
        Command::Centroids { train, output } => commands::index::centroids(&ctx, train, output),
        Command::Route { index } => commands::index::route_stdin(&ctx, index),
        Command::Serve { index, bind, port } => commands::serve::serve(&ctx, index, bind, port),
        Command::AlignBlocks {
            source,
            target,
            origin,
            tau,
            output,
        } => commands::align::align_blocks(&ctx, &source, &target, &origin, tau, output),
        Command::Evaluate {
            hypotheses,
            eval,
            mode,
            add_one,
            index,
        } => commands::evaluate::evaluate(&ctx, &hypotheses, eval, mode, add_one, index),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
