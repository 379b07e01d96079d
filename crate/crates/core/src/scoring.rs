//! Per-window interaction values.
//!
//! An ego's events are bucketed into half-open windows `[start, start + length)`
//! and each (friend, window) cell is reduced to one number:
//!
//! ```text
//! value = alpha * face_to_face + beta * video + gamma * calls + delta * messages
//! ```
//!
//! With [`SizeScaling::LogSize`] the message term credits each message with
//! `log2(1 + size / size_ref)` instead of 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::events::{EventStream, InteractionEvent, InteractionType};

pub const SECONDS_PER_DAY: u64 = 86_400;
pub const DEFAULT_WINDOW_LENGTH: u64 = 7 * SECONDS_PER_DAY;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("timestamp {timestamp} precedes the window epoch {epoch_start}")]
    TimestampBeforeEpoch { timestamp: u64, epoch_start: u64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeScaling {
    #[default]
    CountOnly,
    LogSize,
}

/// Weight per interaction type plus message-size handling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionWeights {
    /// face-to-face
    pub alpha: f64,
    /// video
    pub beta: f64,
    /// call
    pub gamma: f64,
    /// message
    pub delta: f64,
    pub size_ref: u64,
    pub size_scaling: SizeScaling,
}

impl Default for InteractionWeights {
    fn default() -> Self {
        InteractionWeights {
            alpha: 1.0,
            beta: 0.75,
            gamma: 0.5,
            delta: 0.25,
            size_ref: 512,
            size_scaling: SizeScaling::CountOnly,
        }
    }
}

impl InteractionWeights {
    /// Unit weights in count-only mode.
    pub fn unit() -> Self {
        InteractionWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            delta: 1.0,
            ..Default::default()
        }
    }

    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self, ScoringError> {
        let w = InteractionWeights {
            alpha,
            beta,
            gamma,
            delta,
            ..Default::default()
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let all = [self.alpha, self.beta, self.gamma, self.delta];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ScoringError::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(ScoringError::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }
        if self.size_ref == 0 {
            return Err(ScoringError::InvalidWeights("size_ref must be at least 1".into()));
        }
        Ok(())
    }

    pub fn weight_of(&self, itype: InteractionType) -> f64 {
        match itype {
            InteractionType::FaceToFace => self.alpha,
            InteractionType::Video => self.beta,
            InteractionType::Call => self.gamma,
            InteractionType::Message => self.delta,
        }
    }

    /// Multiplies every type weight by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        InteractionWeights {
            alpha: self.alpha * c,
            beta: self.beta * c,
            gamma: self.gamma * c,
            delta: self.delta * c,
            ..*self
        }
    }
}

/// Fixed-length windows anchored at `epoch_start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_length: u64,
    pub epoch_start: u64,
}

impl WindowSpec {
    pub fn new(window_length: u64, epoch_start: u64) -> Result<Self, ScoringError> {
        if window_length == 0 {
            return Err(ScoringError::InvalidWindow("window length must be positive".into()));
        }
        Ok(WindowSpec {
            window_length,
            epoch_start,
        })
    }

    /// Anchors windows at the UTC midnight on or before the stream's first event
    /// (0 for an empty stream).
    pub fn for_stream(stream: &EventStream, window_length: u64) -> Result<Self, ScoringError> {
        let epoch = stream.min_timestamp().map_or(0, midnight_floor);
        WindowSpec::new(window_length, epoch)
    }

    pub fn window_start(&self, window: u64) -> u64 {
        self.epoch_start + window * self.window_length
    }
}

pub fn midnight_floor(ts: u64) -> u64 {
    ts - ts % SECONDS_PER_DAY
}

/// Index of the window containing `timestamp`.
pub fn window_of(timestamp: u64, spec: &WindowSpec) -> Result<u64, ScoringError> {
    if timestamp < spec.epoch_start {
        return Err(ScoringError::TimestampBeforeEpoch {
            timestamp,
            epoch_start: spec.epoch_start,
        });
    }
    Ok((timestamp - spec.epoch_start) / spec.window_length)
}

/// Per-type counts for one (friend, window) cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub f: u64,
    pub v: u64,
    pub p: u64,
    pub e_count: u64,
    pub e_bytes: u64,
    /// Individual message sizes; only filled when log-size scoring is configured.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub message_sizes: Vec<u64>,
}

impl WindowCounts {
    pub fn record(&mut self, event: &InteractionEvent, scaling: SizeScaling) {
        match event.itype {
            InteractionType::FaceToFace => self.f += 1,
            InteractionType::Video => self.v += 1,
            InteractionType::Call => self.p += 1,
            InteractionType::Message => {
                self.e_count += 1;
                self.e_bytes += event.size;
                if scaling == SizeScaling::LogSize {
                    self.message_sizes.push(event.size);
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.f == 0 && self.v == 0 && self.p == 0 && self.e_count == 0
    }

    pub fn count_of(&self, itype: InteractionType) -> u64 {
        match itype {
            InteractionType::FaceToFace => self.f,
            InteractionType::Video => self.v,
            InteractionType::Call => self.p,
            InteractionType::Message => self.e_count,
        }
    }
}

/// Weighted value of one cell.
///
/// In log-size mode each message counts `log2(1 + size / size_ref)`. If the
/// individual sizes were not retained, every message is credited with the
/// cell's mean size.
pub fn interaction_value(counts: &WindowCounts, w: &InteractionWeights) -> f64 {
    let message_term = match w.size_scaling {
        SizeScaling::CountOnly => counts.e_count as f64,
        SizeScaling::LogSize => {
            let size_ref = w.size_ref as f64;
            let credit = |size: f64| (1.0 + size / size_ref).log2();
            if counts.message_sizes.len() as u64 == counts.e_count {
                counts.message_sizes.iter().map(|&s| credit(s as f64)).sum()
            } else {
                let mean = counts.e_bytes as f64 / counts.e_count as f64;
                counts.e_count as f64 * credit(mean)
            }
        }
    };
    w.alpha * counts.f as f64 + w.beta * counts.v as f64 + w.gamma * counts.p as f64 + w.delta * message_term
}

/// Counts the ego's events per (friend, window).
pub fn aggregate_counts(
    stream: &EventStream,
    ego: &str,
    spec: &WindowSpec,
    scaling: SizeScaling,
) -> Result<BTreeMap<(String, u64), WindowCounts>, ScoringError> {
    let mut cells: BTreeMap<(String, u64), WindowCounts> = BTreeMap::new();
    for event in stream.events() {
        let Some(friend) = event.peer_of(ego) else {
            continue;
        };
        let window = window_of(event.timestamp, spec)?;
        cells
            .entry((friend.to_string(), window))
            .or_default()
            .record(event, scaling);
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionValue {
    pub ego: String,
    pub friend: String,
    pub window: u64,
    pub value: f64,
}

/// One value per non-empty cell, ordered by window then friend.
pub fn score_ego(
    stream: &EventStream,
    ego: &str,
    spec: &WindowSpec,
    w: &InteractionWeights,
) -> Result<Vec<InteractionValue>, ScoringError> {
    let cells = aggregate_counts(stream, ego, spec, w.size_scaling)?;
    let mut values: Vec<InteractionValue> = cells
        .into_iter()
        .map(|((friend, window), counts)| InteractionValue {
            ego: ego.to_string(),
            value: interaction_value(&counts, w),
            friend,
            window,
        })
        .collect();
    values.sort_by(|a, b| (a.window, &a.friend).cmp(&(b.window, &b.friend)));
    Ok(values)
}
