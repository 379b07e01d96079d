//! The four subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ego_ranker_core::circles::CircleAssignment;
use ego_ranker_core::colley::RatingsFile;
use ego_ranker_core::events::{load_stream, EventStream, Format, InteractionEvent, LoadError, LoadedStream, ParseMode};
use ego_ranker_core::pipeline::{EgoResult, EgoTracker, PipelineError};
use ego_ranker_core::scoring::{midnight_floor, WindowSpec};
use ego_ranker_core::synth::{summarize, RecoveryReport, Scenario, SynthError};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{render_dot, to_pretty_json, write_result};
use crate::state::{write_atomic, Session, StateDir};
use crate::CliError;

/// `--ego ID|all`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EgoSelector {
    All,
    One(String),
}

impl FromStr for EgoSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "" => Err("ego must not be empty".into()),
            "all" => Ok(EgoSelector::All),
            id => Ok(EgoSelector::One(id.to_string())),
        }
    }
}

const MAX_REPORTED_LINES: usize = 10;

fn load_input(input: &Path, format: Format, mode: ParseMode) -> Result<LoadedStream, CliError> {
    load_stream(input, format, mode).map_err(|err| match err {
        LoadError::Io(e) => CliError::io("cannot read", input, e),
        LoadError::Parse(errors) => {
            let mut msg = format!("{}: {} malformed record(s)", input.display(), errors.len());
            for e in errors.iter().take(MAX_REPORTED_LINES) {
                msg.push_str(&format!("\n  line {}: {}", e.line, e.cause));
            }
            if errors.len() > MAX_REPORTED_LINES {
                msg.push_str(&format!("\n  ... and {} more", errors.len() - MAX_REPORTED_LINES));
            }
            CliError::Input(msg)
        }
    })
}

/// Each user's events, in stream order.
fn events_by_user(stream: &EventStream) -> BTreeMap<&str, Vec<&InteractionEvent>> {
    let mut by_user: BTreeMap<&str, Vec<&InteractionEvent>> = BTreeMap::new();
    for e in stream.events() {
        by_user.entry(&e.user_a).or_default().push(e);
        by_user.entry(&e.user_b).or_default().push(e);
    }
    by_user
}

fn feed(tracker: &mut EgoTracker, events: &[&InteractionEvent]) -> Result<(), PipelineError> {
    for e in events {
        tracker.observe(e)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankSummary {
    pub egos: Vec<String>,
    pub rejected_lines: usize,
}

fn write_results(out: &Path, results: Vec<Result<EgoResult, CliError>>) -> Result<Vec<String>, CliError> {
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for result in &results {
        write_result(out, result)?;
    }
    Ok(results.iter().map(|r| r.ego().to_string()).collect())
}

/// Ranks egos from an event file, or from the state directory when `input`
/// is `None`, writing one ratings and one circles file per ego into `out`.
pub fn cmd_rank(
    input: Option<&Path>,
    format: Format,
    mode: ParseMode,
    config: &RunConfig,
    ego: &EgoSelector,
    out: &Path,
) -> Result<RankSummary, CliError> {
    let pipeline = config.pipeline();
    let Some(input) = input else {
        let state = StateDir::new(&config.state_dir);
        if state.load_session()?.is_none() {
            return Err(CliError::Config(format!(
                "no --input given and no ingested state in {}",
                state.root().display()
            )));
        }
        let egos = match ego {
            EgoSelector::All => state.egos()?,
            EgoSelector::One(id) => vec![id.clone()],
        };
        let results = egos
            .par_iter()
            .map(|ego| {
                let tracker = state
                    .load_tracker(ego)?
                    .ok_or_else(|| CliError::Config(format!("unknown ego `{ego}`: no state snapshot")))?;
                Ok(tracker.rank(&pipeline)?)
            })
            .collect();
        return Ok(RankSummary {
            egos: write_results(out, results)?,
            rejected_lines: 0,
        });
    };

    let loaded = load_input(input, format, mode)?;
    let stream = &loaded.stream;
    let window = match config.epoch_start {
        Some(epoch) => WindowSpec::new(config.window_length, epoch),
        None => WindowSpec::for_stream(stream, config.window_length),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let by_user = events_by_user(stream);
    let egos: Vec<&str> = match ego {
        EgoSelector::All => by_user.keys().copied().collect(),
        EgoSelector::One(id) if by_user.contains_key(id.as_str()) => vec![id.as_str()],
        EgoSelector::One(id) => {
            return Err(CliError::Config(format!(
                "unknown ego `{id}`: no events, empty friend set"
            )))
        }
    };
    let results = egos
        .par_iter()
        .map(|&ego| {
            let mut tracker = EgoTracker::new(ego, window, config.weights);
            feed(&mut tracker, &by_user[ego])?;
            Ok(tracker.rank(&pipeline)?)
        })
        .collect();
    Ok(RankSummary {
        egos: write_results(out, results)?,
        rejected_lines: loaded.rejected.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub events: usize,
    pub egos_updated: usize,
    pub rejected_lines: usize,
    pub warnings: Vec<String>,
}

/// Appends a batch to the per-ego snapshots in the state directory.
///
/// Nothing is written unless every ego accepts the batch.
pub fn cmd_ingest(
    input: &Path,
    format: Format,
    mode: ParseMode,
    config: &RunConfig,
    ego: &EgoSelector,
) -> Result<IngestSummary, CliError> {
    let loaded = load_input(input, format, mode)?;
    let stream = &loaded.stream;
    let state = StateDir::new(&config.state_dir);
    let mut warnings = Vec::new();
    if state.seen_digests()?.iter().any(|d| d == stream.source_digest()) {
        warnings.push(format!(
            "batch {} (digest {}) was ingested before; its events are counted again",
            input.display(),
            stream.source_digest()
        ));
    }

    let session = match state.load_session()? {
        Some(session) => {
            if session.window.window_length != config.window_length
                || session.weights != config.weights
                || config.epoch_start.is_some_and(|e| e != session.window.epoch_start)
            {
                return Err(CliError::Config(format!(
                    "state in {} was built with different window or weight settings",
                    state.root().display()
                )));
            }
            session
        }
        None => {
            let Some(first) = stream.min_timestamp() else {
                warnings.push("empty batch; state not initialised".into());
                return Ok(IngestSummary {
                    events: 0,
                    egos_updated: 0,
                    rejected_lines: loaded.rejected.len(),
                    warnings,
                });
            };
            let epoch = config.epoch_start.unwrap_or_else(|| midnight_floor(first));
            Session {
                window: WindowSpec::new(config.window_length, epoch)
                    .map_err(|e| CliError::Config(e.to_string()))?,
                weights: config.weights,
            }
        }
    };

    let by_user = events_by_user(stream);
    let egos: Vec<&str> = match ego {
        EgoSelector::All => by_user.keys().copied().collect(),
        EgoSelector::One(id) => {
            if !by_user.contains_key(id.as_str()) {
                warnings.push(format!("no events for ego `{id}` in this batch"));
            }
            vec![id.as_str()]
        }
    };
    let empty = Vec::new();
    let trackers = egos
        .par_iter()
        .map(|&ego| {
            let mut tracker = state
                .load_tracker(ego)?
                .unwrap_or_else(|| EgoTracker::new(ego, session.window, session.weights));
            feed(&mut tracker, by_user.get(ego).unwrap_or(&empty))?;
            Ok(tracker)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    for tracker in &trackers {
        state.save_tracker(tracker)?;
    }
    state.save_session(&session)?;
    state.append_digest(stream.source_digest(), stream.len())?;
    Ok(IngestSummary {
        events: stream.len(),
        egos_updated: trackers.len(),
        rejected_lines: loaded.rejected.len(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub reports: Vec<(u64, RecoveryReport)>,
    pub files: Vec<PathBuf>,
}

pub fn report_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("report_seed_{seed}.json"))
}

pub fn aggregate_path(out: &Path) -> PathBuf {
    out.join("aggregate.json")
}

/// Runs every seed of a scenario file; writes one report per seed plus the
/// medians in `aggregate.json`.
pub fn cmd_simulate(scenario: &Path, out: &Path) -> Result<SimulateSummary, CliError> {
    let text = std::fs::read_to_string(scenario)
        .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", scenario.display())))?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad scenario: {e}")))?;
    scenario
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let distinct: BTreeSet<u64> = scenario.seeds.iter().copied().collect();
    if distinct.len() != scenario.seeds.len() {
        return Err(CliError::Config("bad scenario: duplicate seeds".into()));
    }
    let reports = scenario
        .seeds
        .par_iter()
        .map(|&seed| {
            scenario.run_seed(seed).map(|r| (seed, r)).map_err(|e| match e {
                SynthError::Pipeline(p) => CliError::from(p),
                other => CliError::Config(other.to_string()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut files = Vec::new();
    for (seed, report) in &reports {
        let path = report_path(out, *seed);
        write_atomic(&path, to_pretty_json(report).as_bytes())?;
        files.push(path);
    }
    let all: Vec<RecoveryReport> = reports.iter().map(|(_, r)| r.clone()).collect();
    let path = aggregate_path(out);
    write_atomic(&path, to_pretty_json(&summarize(&all)).as_bytes())?;
    files.push(path);
    Ok(SimulateSummary { reports, files })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io("cannot read", path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("malformed {}: {e}", path.display())))
}

/// DOT text for a ratings file and its matching circles file.
pub fn cmd_export_dot(ratings: &Path, circles: &Path) -> Result<String, CliError> {
    let ratings: RatingsFile = read_json(ratings)?;
    let circles: CircleAssignment = read_json(circles)?;
    render_dot(&ratings, &circles)
}
