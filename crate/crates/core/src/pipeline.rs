//! End-to-end ranking for one ego: score, play windows, rate, assign circles.
//!
//! [`EgoTracker`] is the incremental form. Events are fed in timestamp order;
//! the most recent window stays open (its counts are kept as pending state)
//! until an event from a later window arrives, because a later batch may still
//! add events to it. Ranking closes the open window on a copy, so feeding a
//! trace in any chronological split yields exactly the record a single pass
//! would.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circles::{assign_circles, CircleAssignment, CircleError, CircleLayout};
use crate::colley::{rank_friends, ColleyError, RatingResult, DEFAULT_TOLERANCE};
use crate::events::{EventStream, InteractionEvent};
use crate::scoring::{interaction_value, window_of, InteractionWeights, ScoringError, WindowCounts, WindowSpec};
use crate::tournament::{TournamentError, TournamentRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Tournament(#[from] TournamentError),
    #[error(transparent)]
    Colley(#[from] ColleyError),
    #[error(transparent)]
    Circles(#[from] CircleError),
    #[error("event at {timestamp} for ego `{ego}` falls in window {window}, which is already closed (next open window is {first_open})")]
    OutOfOrder {
        ego: String,
        timestamp: u64,
        window: u64,
        first_open: u64,
    },
}

/// Tunables shared by every ego.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub weights: InteractionWeights,
    pub layout: CircleLayout,
    pub tolerance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            weights: InteractionWeights::default(),
            layout: CircleLayout::default(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Running state for one ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoTracker {
    ego: String,
    window: WindowSpec,
    weights: InteractionWeights,
    record: TournamentRecord,
    /// Windows below this index are closed.
    first_open: u64,
    open_window: Option<u64>,
    pending: BTreeMap<String, WindowCounts>,
}

impl EgoTracker {
    pub fn new(ego: impl Into<String>, window: WindowSpec, weights: InteractionWeights) -> Self {
        let ego = ego.into();
        EgoTracker {
            record: TournamentRecord::new(ego.clone()),
            ego,
            window,
            weights,
            first_open: 0,
            open_window: None,
            pending: BTreeMap::new(),
        }
    }

    pub fn ego(&self) -> &str {
        &self.ego
    }

    pub fn window_spec(&self) -> &WindowSpec {
        &self.window
    }

    pub fn weights(&self) -> &InteractionWeights {
        &self.weights
    }

    /// Record of closed windows only.
    pub fn closed_record(&self) -> &TournamentRecord {
        &self.record
    }

    /// Feeds one event. Events not involving the ego are ignored and
    /// reported as `Ok(false)`.
    pub fn observe(&mut self, event: &InteractionEvent) -> Result<bool, PipelineError> {
        let Some(friend) = event.peer_of(&self.ego) else {
            return Ok(false);
        };
        let window = window_of(event.timestamp, &self.window)?;
        if window < self.first_open || self.open_window.is_some_and(|open| window < open) {
            return Err(PipelineError::OutOfOrder {
                ego: self.ego.clone(),
                timestamp: event.timestamp,
                window,
                first_open: self.open_window.unwrap_or(self.first_open),
            });
        }
        if self.open_window.is_some_and(|open| window > open) {
            self.close_open_window()?;
        }
        self.open_window = Some(window);
        let scaling = self.weights.size_scaling;
        match self.pending.get_mut(friend) {
            Some(counts) => counts.record(event, scaling),
            None => {
                let mut counts = WindowCounts::default();
                counts.record(event, scaling);
                self.pending.insert(friend.to_string(), counts);
            }
        }
        Ok(true)
    }

    /// Feeds a whole stream. On error the tracker is left unchanged.
    pub fn observe_stream(&mut self, stream: &EventStream) -> Result<usize, PipelineError> {
        let mut next = self.clone();
        let mut used = 0;
        for event in stream.events() {
            if next.observe(event)? {
                used += 1;
            }
        }
        *self = next;
        Ok(used)
    }

    /// Plays the open window: its friends join the tournament, then every
    /// known friend is compared on this window's values.
    pub fn close_open_window(&mut self) -> Result<(), PipelineError> {
        let Some(open) = self.open_window.take() else {
            return Ok(());
        };
        let pending = std::mem::take(&mut self.pending);
        self.record.register_friends(pending.keys().map(String::as_str));
        let values: BTreeMap<String, f64> = pending
            .into_iter()
            .map(|(friend, counts)| {
                let value = interaction_value(&counts, &self.weights);
                (friend, value)
            })
            .collect();
        self.record.play_window(&values)?;
        self.first_open = open + 1;
        Ok(())
    }

    /// The record as if the stream ended now.
    pub fn finished_record(&self) -> Result<TournamentRecord, PipelineError> {
        let mut closed = self.clone();
        closed.close_open_window()?;
        Ok(closed.record)
    }

    pub fn rank(&self, config: &PipelineConfig) -> Result<EgoResult, PipelineError> {
        EgoResult::from_record(self.finished_record()?, config)
    }
}

/// Ratings and circles for one ego.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoResult {
    pub record: TournamentRecord,
    pub ratings: RatingResult,
    pub circles: CircleAssignment,
}

impl EgoResult {
    pub fn from_record(record: TournamentRecord, config: &PipelineConfig) -> Result<Self, PipelineError> {
        let ratings = rank_friends(&record, config.tolerance)?;
        let circles = assign_circles(record.ego(), &ratings.ranking, &config.layout)?;
        Ok(EgoResult {
            record,
            ratings,
            circles,
        })
    }

    pub fn ego(&self) -> &str {
        self.record.ego()
    }
}

/// Runs the whole pipeline for one ego over a complete stream.
pub fn rank_ego(
    stream: &EventStream,
    ego: &str,
    window: WindowSpec,
    config: &PipelineConfig,
) -> Result<EgoResult, PipelineError> {
    let mut tracker = EgoTracker::new(ego, window, config.weights);
    tracker.observe_stream(stream)?;
    tracker.rank(config)
}
