//! Ranked ego networks from interaction logs.
//!
//! The pipeline for one ego (the focal user) runs in four stages:
//!
//! 1. [`scoring`] buckets the ego's [`events`] into fixed windows and turns
//!    each (friend, window) into a weighted interaction value.
//! 2. [`tournament`] compares friends pairwise inside every window; the larger
//!    value wins.
//! 3. [`colley`] solves the Colley system over the accumulated games and
//!    ranks friends by rating.
//! 4. [`circles`] cuts the ranking into Dunbar circles of 5, 15, 45 and 135.
//!
//! [`pipeline`] wires the stages together, incrementally if needed, and
//! [`synth`] generates seeded traces with a known answer to measure recovery.
//!
//! ```
//! use ego_ranker_core::events::{parse_stream, Format, ParseMode};
//! use ego_ranker_core::pipeline::{rank_ego, PipelineConfig};
//! use ego_ranker_core::scoring::WindowSpec;
//!
//! let log = b"alice,bob,100,call\nalice,carol,200,message,64\nalice,bob,300,f2f\n";
//! let stream = parse_stream(log, Format::Csv, ParseMode::Strict)?.stream;
//! let window = WindowSpec::new(7 * 86_400, 0)?;
//! let result = rank_ego(&stream, "alice", window, &PipelineConfig::default())?;
//! assert_eq!(result.ratings.ranking, ["bob", "carol"]);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod circles;
pub mod colley;
pub mod events;
mod fixed;
pub mod pipeline;
pub mod scoring;
pub mod synth;
pub mod tournament;

pub use circles::{assign_circles, circle_of, CircleAssignment, CircleLayout};
pub use colley::{build_system, laplace_rating, rank_friends, solve, RatingResult};
pub use events::{EventStream, InteractionEvent, InteractionType};
pub use pipeline::{rank_ego, EgoResult, EgoTracker, PipelineConfig};
pub use scoring::{InteractionWeights, WindowSpec};
pub use tournament::TournamentRecord;

// The guide under book/ is compiled as doc-tests so its snippets cannot rot.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/events.md")]
    mod events {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/tournament.md")]
    mod tournament {}
    #[doc = include_str!("../../../book/src/colley.md")]
    mod colley {}
    #[doc = include_str!("../../../book/src/circles.md")]
    mod circles {}
    #[doc = include_str!("../../../book/src/incremental.md")]
    mod incremental {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
