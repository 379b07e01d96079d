//! Synthetic traces with known ground truth, and recovery metrics.
//!
//! A [`GroundTruth`] splits friends into tiers of decreasing strength. For
//! every friend, window and interaction type the number of events is drawn
//! from a Poisson distribution with mean `base_rate(type) * strength`, so the
//! expected interaction value of a friend is proportional to its tier
//! strength. Running the pipeline on such a trace and comparing the ranking
//! and circles to the tiers measures how well the truth is recovered.
//!
//! All randomness comes from one `u64` seed. Each friend draws from its own
//! ChaCha stream derived from that seed.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::circles::{assign_circles, CircleLayout};
use crate::colley::{rank_friends, DEFAULT_TOLERANCE};
use crate::events::{EventStream, InteractionEvent, InteractionType};
use crate::pipeline::{EgoTracker, PipelineError};
use crate::scoring::{InteractionWeights, WindowSpec, DEFAULT_WINDOW_LENGTH};

pub const SYNTH_EGO: &str = "ego";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("bad tier specification: {0}")]
    BadTierSpec(String),
    #[error("bad trace configuration: {0}")]
    BadTraceConfig(String),
    #[error("ranking does not match the ground-truth friend set: {0}")]
    FriendSetMismatch(String),
    #[error("bad scenario: {0}")]
    BadScenario(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier {
    pub friends: Vec<String>,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ego: String,
    /// Strongest tier first.
    pub tiers: Vec<Tier>,
    pub seed: u64,
}

impl GroundTruth {
    pub fn friend_count(&self) -> usize {
        self.tiers.iter().map(|t| t.friends.len()).sum()
    }

    /// Tier index of every friend.
    pub fn tier_index(&self) -> HashMap<&str, usize> {
        self.tiers
            .iter()
            .enumerate()
            .flat_map(|(k, t)| t.friends.iter().map(move |f| (f.as_str(), k)))
            .collect()
    }

    /// Friends with their tier strength, in friend ID order.
    pub fn friends_with_strength(&self) -> Vec<(&str, f64)> {
        let mut all: Vec<(&str, f64)> = self
            .tiers
            .iter()
            .flat_map(|t| t.friends.iter().map(move |f| (f.as_str(), t.strength)))
            .collect();
        all.sort_by(|a, b| a.0.cmp(b.0));
        all
    }
}

/// Builds a ground truth with friend IDs `f000, f001, ...` shuffled across
/// tiers by `seed`, so ID order carries no information about tier order.
pub fn generate_truth(tier_sizes: &[usize], tier_strengths: &[f64], seed: u64) -> Result<GroundTruth, SynthError> {
    if tier_sizes.is_empty() || tier_sizes.len() != tier_strengths.len() {
        return Err(SynthError::BadTierSpec(format!(
            "{} tier sizes but {} strengths",
            tier_sizes.len(),
            tier_strengths.len()
        )));
    }
    if tier_sizes.contains(&0) {
        return Err(SynthError::BadTierSpec("tiers must not be empty".into()));
    }
    if tier_strengths.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(SynthError::BadTierSpec("strengths must be positive".into()));
    }
    if tier_strengths.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SynthError::BadTierSpec("strengths must be strictly decreasing".into()));
    }
    let total: usize = tier_sizes.iter().sum();
    let width = total.saturating_sub(1).to_string().len().max(3);
    let mut ids: Vec<String> = (0..total).map(|i| format!("f{i:0width$}")).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut rest = ids.as_slice();
    let tiers = tier_sizes
        .iter()
        .zip(tier_strengths)
        .map(|(&size, &strength)| {
            let (head, tail) = rest.split_at(size);
            rest = tail;
            let mut friends = head.to_vec();
            friends.sort();
            Tier { friends, strength }
        })
        .collect();
    Ok(GroundTruth {
        ego: SYNTH_EGO.to_string(),
        tiers,
        seed,
    })
}

/// Expected events per window per unit of tier strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseRates {
    pub face_to_face: f64,
    pub video: f64,
    pub call: f64,
    pub message: f64,
}

impl Default for BaseRates {
    fn default() -> Self {
        BaseRates {
            face_to_face: 0.1,
            video: 0.1,
            call: 0.3,
            message: 0.5,
        }
    }
}

impl BaseRates {
    pub fn rate_of(&self, itype: InteractionType) -> f64 {
        match itype {
            InteractionType::FaceToFace => self.face_to_face,
            InteractionType::Video => self.video,
            InteractionType::Call => self.call,
            InteractionType::Message => self.message,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub duration_windows: u64,
    pub base_rates: BaseRates,
    pub mean_message_size: u64,
}

impl TraceConfig {
    pub fn new(duration_windows: u64, base_rates: BaseRates) -> Self {
        TraceConfig {
            duration_windows,
            base_rates,
            mean_message_size: 512,
        }
    }

    /// Rates must be finite and non-negative and the mean size at least 1.
    /// All-zero rates are accepted here; they produce an empty trace.
    fn check_sampleable(&self) -> Result<(), SynthError> {
        if InteractionType::ALL
            .iter()
            .any(|&t| !self.base_rates.rate_of(t).is_finite() || self.base_rates.rate_of(t) < 0.0)
        {
            return Err(SynthError::BadTraceConfig("base rates must be non-negative".into()));
        }
        if self.mean_message_size == 0 {
            return Err(SynthError::BadTraceConfig("mean message size must be at least 1".into()));
        }
        Ok(())
    }

    /// Full validation: additionally requires one positive rate.
    pub fn validate(&self) -> Result<(), SynthError> {
        self.check_sampleable()?;
        if InteractionType::ALL.iter().all(|&t| self.base_rates.rate_of(t) == 0.0) {
            return Err(SynthError::BadTraceConfig("at least one base rate must be positive".into()));
        }
        Ok(())
    }
}

fn friend_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws a trace for the truth's ego.
pub fn sample_trace(
    truth: &GroundTruth,
    cfg: &TraceConfig,
    spec: &WindowSpec,
    seed: u64,
) -> Result<EventStream, SynthError> {
    cfg.check_sampleable()?;
    let sizes = Geometric::new(1.0 / cfg.mean_message_size as f64)
        .map_err(|e| SynthError::BadTraceConfig(e.to_string()))?;
    let mut events = Vec::new();
    for (k, (friend, strength)) in truth.friends_with_strength().into_iter().enumerate() {
        let mut rng = friend_rng(seed, k as u64 + 1);
        let draws: Vec<(InteractionType, Option<Poisson<f64>>)> = InteractionType::ALL
            .iter()
            .map(|&t| {
                let mean = cfg.base_rates.rate_of(t) * strength;
                (t, (mean > 0.0).then(|| Poisson::new(mean).expect("positive finite mean")))
            })
            .collect();
        for window in 0..cfg.duration_windows {
            let start = spec.window_start(window);
            for (itype, dist) in &draws {
                let Some(dist) = dist else { continue };
                let count = dist.sample(&mut rng) as u64;
                for _ in 0..count {
                    let ts = start + rng.random_range(0..spec.window_length);
                    let size = if *itype == InteractionType::Message {
                        1 + sizes.sample(&mut rng)
                    } else {
                        0
                    };
                    let event = InteractionEvent::new(&truth.ego, friend, ts, *itype, size)
                        .map_err(|e| SynthError::BadTierSpec(e.to_string()))?;
                    events.push(event);
                }
            }
        }
    }
    Ok(EventStream::from_events(events))
}

/// Agreement between a ranking and the tier order, over cross-tier pairs only:
/// `(concordant - discordant) / (concordant + discordant)`. Returns 1.0 when
/// there are no cross-tier pairs.
pub fn kendall_tau(ranking: &[String], truth: &GroundTruth) -> Result<f64, SynthError> {
    let tiers = truth.tier_index();
    if ranking.len() != tiers.len() {
        return Err(SynthError::FriendSetMismatch(format!(
            "ranking has {} friends, truth has {}",
            ranking.len(),
            tiers.len()
        )));
    }
    let mut seen = HashSet::new();
    let mut ranked_tiers = Vec::with_capacity(ranking.len());
    for friend in ranking {
        let tier = *tiers
            .get(friend.as_str())
            .ok_or_else(|| SynthError::FriendSetMismatch(format!("unknown friend `{friend}`")))?;
        if !seen.insert(friend.as_str()) {
            return Err(SynthError::FriendSetMismatch(format!("duplicate friend `{friend}`")));
        }
        ranked_tiers.push(tier);
    }
    let (mut concordant, mut discordant) = (0u64, 0u64);
    for (i, &ti) in ranked_tiers.iter().enumerate() {
        for &tj in &ranked_tiers[i + 1..] {
            if ti < tj {
                concordant += 1;
            } else if ti > tj {
                discordant += 1;
            }
        }
    }
    let comparable = concordant + discordant;
    if comparable == 0 {
        return Ok(1.0);
    }
    Ok((concordant as f64 - discordant as f64) / comparable as f64)
}

/// How well one run recovered the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    #[serde(serialize_with = "crate::fixed::four_places")]
    pub kendall_tau: f64,
    #[serde(serialize_with = "crate::fixed::four_places")]
    pub circle_accuracy: f64,
    #[serde(serialize_with = "crate::fixed::four_places_seq")]
    pub per_tier_accuracy: Vec<f64>,
    pub windows_used: u64,
}

/// Samples a trace, runs the pipeline and scores the result.
///
/// Friends that never appear in the trace cannot be ranked by the pipeline;
/// they are appended after the ranked friends in ID order before circles and
/// metrics are computed.
pub fn evaluate(
    truth: &GroundTruth,
    cfg: &TraceConfig,
    spec: &WindowSpec,
    weights: &InteractionWeights,
    layout: &CircleLayout,
    seed: u64,
) -> Result<RecoveryReport, SynthError> {
    let stream = sample_trace(truth, cfg, spec, seed)?;
    let mut tracker = EgoTracker::new(&truth.ego, *spec, *weights);
    tracker.observe_stream(&stream)?;
    let record = tracker.finished_record()?;
    let mut ranking = if record.is_empty() {
        Vec::new()
    } else {
        rank_friends(&record, DEFAULT_TOLERANCE)
            .map_err(PipelineError::from)?
            .ranking
    };
    let mut unseen: Vec<String> = truth
        .tiers
        .iter()
        .flat_map(|t| t.friends.iter())
        .filter(|f| !record.contains(f))
        .cloned()
        .collect();
    unseen.sort();
    ranking.extend(unseen);

    let assignment = assign_circles(&truth.ego, &ranking, layout).map_err(PipelineError::from)?;
    let mut per_tier = Vec::with_capacity(truth.tiers.len());
    let mut hits_total = 0usize;
    for (k, tier) in truth.tiers.iter().enumerate() {
        let hits = tier
            .friends
            .iter()
            .filter(|f| assignment.index_of(f) == Some(k))
            .count();
        hits_total += hits;
        per_tier.push(hits as f64 / tier.friends.len() as f64);
    }
    Ok(RecoveryReport {
        kendall_tau: kendall_tau(&ranking, truth)?,
        circle_accuracy: hits_total as f64 / truth.friend_count() as f64,
        per_tier_accuracy: per_tier,
        windows_used: record.windows_processed(),
    })
}

fn default_mean_message_size() -> u64 {
    512
}

fn default_window_length() -> u64 {
    DEFAULT_WINDOW_LENGTH
}

/// A batch of seeded evaluations, as read from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub tier_sizes: Vec<usize>,
    pub tier_strengths: Vec<f64>,
    #[serde(default)]
    pub base_rates: BaseRates,
    pub windows: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_mean_message_size")]
    pub mean_message_size: u64,
    #[serde(default = "default_window_length")]
    pub window_length_seconds: u64,
    #[serde(default)]
    pub weights: InteractionWeights,
    #[serde(default)]
    pub circles: CircleLayout,
}

impl Scenario {
    /// The default evaluation: tiers 5/10/30 with strengths 10/3/1 over 200 windows.
    pub fn default_with_seeds(seeds: Vec<u64>) -> Self {
        Scenario {
            tier_sizes: vec![5, 10, 30],
            tier_strengths: vec![10.0, 3.0, 1.0],
            base_rates: BaseRates::default(),
            windows: 200,
            seeds,
            mean_message_size: default_mean_message_size(),
            window_length_seconds: DEFAULT_WINDOW_LENGTH,
            weights: InteractionWeights::default(),
            circles: CircleLayout::default(),
        }
    }

    pub fn trace_config(&self) -> TraceConfig {
        TraceConfig {
            duration_windows: self.windows,
            base_rates: self.base_rates,
            mean_message_size: self.mean_message_size,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.seeds.is_empty() {
            return Err(SynthError::BadScenario("no seeds".into()));
        }
        if self.window_length_seconds == 0 {
            return Err(SynthError::BadScenario("window length must be positive".into()));
        }
        self.weights
            .validate()
            .map_err(|e| SynthError::BadScenario(e.to_string()))?;
        self.trace_config().validate()?;
        generate_truth(&self.tier_sizes, &self.tier_strengths, 0)?;
        Ok(())
    }

    /// Evaluates one seed; the seed drives both the truth shuffle and the trace.
    pub fn run_seed(&self, seed: u64) -> Result<RecoveryReport, SynthError> {
        let truth = generate_truth(&self.tier_sizes, &self.tier_strengths, seed)?;
        let spec = WindowSpec::new(self.window_length_seconds, 0)
            .map_err(|e| SynthError::BadScenario(e.to_string()))?;
        evaluate(&truth, &self.trace_config(), &spec, &self.weights, &self.circles, seed)
    }

    /// One report per seed, in seed order.
    pub fn run(&self) -> Result<Vec<(u64, RecoveryReport)>, SynthError> {
        self.validate()?;
        self.seeds
            .iter()
            .map(|&seed| Ok((seed, self.run_seed(seed)?)))
            .collect()
    }
}

/// Medians over a set of reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub runs: usize,
    #[serde(serialize_with = "crate::fixed::four_places")]
    pub median_kendall_tau: f64,
    #[serde(serialize_with = "crate::fixed::four_places")]
    pub median_circle_accuracy: f64,
    #[serde(serialize_with = "crate::fixed::four_places_seq")]
    pub median_per_tier_accuracy: Vec<f64>,
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

pub fn summarize(reports: &[RecoveryReport]) -> ScenarioSummary {
    let tiers = reports.first().map_or(0, |r| r.per_tier_accuracy.len());
    let per_tier = (0..tiers)
        .map(|k| median(&reports.iter().map(|r| r.per_tier_accuracy[k]).collect::<Vec<_>>()))
        .collect();
    ScenarioSummary {
        runs: reports.len(),
        median_kendall_tau: median(&reports.iter().map(|r| r.kendall_tau).collect::<Vec<_>>()),
        median_circle_accuracy: median(&reports.iter().map(|r| r.circle_accuracy).collect::<Vec<_>>()),
        median_per_tier_accuracy: per_tier,
    }
}

/// Total events per type in a stream.
pub fn type_totals(stream: &EventStream) -> BTreeMap<InteractionType, u64> {
    let mut totals = BTreeMap::new();
    for e in stream.events() {
        *totals.entry(e.itype).or_insert(0) += 1;
    }
    totals
}
