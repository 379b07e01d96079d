use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ego_ranker::commands::{cmd_export_dot, cmd_ingest, cmd_rank, cmd_simulate, EgoSelector};
use ego_ranker::config::{RunConfig, STATE_ENV};
use ego_ranker::state::write_atomic;
use ego_ranker::CliError;
use ego_ranker_core::events::{Format, ParseMode};

#[derive(Parser)]
#[command(name = "ego-ranker", version, about = "Rank a user's friends from interaction logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank egos from an event file, or from ingested state when --input is omitted
    Rank {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Output directory for <ego>.ratings.json and <ego>.circles.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Append an event batch to the per-ego state snapshots
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a synthetic recovery scenario
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a ratings/circles pair as a Graphviz star graph
    ExportDot {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        circles: PathBuf,
        /// Write to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// csv or jsonl; inferred from the input extension when omitted
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "all")]
    ego: EgoSelector,
    /// Skip malformed records instead of failing
    #[arg(long)]
    lenient: bool,
}

impl Common {
    fn format_for(&self, input: Option<&Path>) -> Format {
        self.format.unwrap_or_else(|| {
            match input.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
                Some("jsonl") | Some("ndjson") => Format::Jsonl,
                _ => Format::Csv,
            }
        })
    }

    fn mode(&self) -> ParseMode {
        if self.lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        }
    }

    fn config(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(self.config.as_deref(), std::env::var_os(STATE_ENV).map(PathBuf::from))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Rank { input, common, out } => {
            let config = common.config()?;
            let summary = cmd_rank(
                input.as_deref(),
                common.format_for(input.as_deref()),
                common.mode(),
                &config,
                &common.ego,
                &out,
            )?;
            if summary.rejected_lines > 0 {
                eprintln!("warning: skipped {} malformed record(s)", summary.rejected_lines);
            }
            eprintln!("ranked {} ego(s) into {}", summary.egos.len(), out.display());
        }
        Command::Ingest { input, common } => {
            let config = common.config()?;
            let summary = cmd_ingest(
                &input,
                common.format_for(Some(&input)),
                common.mode(),
                &config,
                &common.ego,
            )?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            if summary.rejected_lines > 0 {
                eprintln!("warning: skipped {} malformed record(s)", summary.rejected_lines);
            }
            eprintln!(
                "ingested {} event(s) for {} ego(s); {} warning(s)",
                summary.events,
                summary.egos_updated,
                summary.warnings.len()
            );
        }
        Command::Simulate { scenario, out } => {
            let summary = cmd_simulate(&scenario, &out)?;
            eprintln!(
                "wrote {} report(s) and aggregate.json to {}",
                summary.reports.len(),
                out.display()
            );
        }
        Command::ExportDot { ratings, circles, out } => {
            let dot = cmd_export_dot(&ratings, &circles)?;
            match out {
                Some(path) => write_atomic(&path, dot.as_bytes())?,
                None => print!("{dot}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
