//! Dunbar circles.
//!
//! Circle bounds are cumulative: with the default layout `[5, 15, 45, 135]`
//! the innermost circle holds ranks 1..=5, the next ranks 6..=15, and so on,
//! giving per-circle capacities 5, 10, 30 and 90. Friends ranked past the
//! last bound land in an overflow list instead of being dropped.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircleError {
    #[error("friend `{0}` appears more than once in the ranking")]
    DuplicateFriend(String),
    #[error("invalid circle layout: {0}")]
    InvalidLayout(String),
}

/// Strictly increasing cumulative circle sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct CircleLayout {
    bounds: Vec<usize>,
}

impl Default for CircleLayout {
    fn default() -> Self {
        CircleLayout::geometric(5, 3, 4)
    }
}

impl CircleLayout {
    pub fn new(bounds: Vec<usize>) -> Result<Self, CircleError> {
        if bounds.is_empty() {
            return Err(CircleError::InvalidLayout("no bounds".into()));
        }
        if bounds[0] == 0 {
            return Err(CircleError::InvalidLayout("first bound must be at least 1".into()));
        }
        if bounds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CircleError::InvalidLayout("bounds must be strictly increasing".into()));
        }
        Ok(CircleLayout { bounds })
    }

    /// `layers` bounds starting at `inner` and growing by `factor`.
    pub fn geometric(inner: usize, factor: usize, layers: usize) -> Self {
        let bounds = std::iter::successors(Some(inner), |b| Some(b * factor))
            .take(layers)
            .collect();
        CircleLayout { bounds }
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// Per-circle capacities (differences of the cumulative bounds).
    pub fn capacities(&self) -> Vec<usize> {
        let mut prev = 0;
        self.bounds
            .iter()
            .map(|&b| {
                let cap = b - prev;
                prev = b;
                cap
            })
            .collect()
    }
}

impl TryFrom<Vec<usize>> for CircleLayout {
    type Error = CircleError;

    fn try_from(bounds: Vec<usize>) -> Result<Self, Self::Error> {
        CircleLayout::new(bounds)
    }
}

impl From<CircleLayout> for Vec<usize> {
    fn from(layout: CircleLayout) -> Self {
        layout.bounds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CirclePosition {
    Circle(usize),
    Overflow,
}

impl CirclePosition {
    /// Circle index, with overflow mapped to `layout.len()`.
    pub fn index(self, layout: &CircleLayout) -> usize {
        match self {
            CirclePosition::Circle(k) => k,
            CirclePosition::Overflow => layout.len(),
        }
    }
}

/// Circle for a 1-based rank: the smallest `k` with `rank <= bounds[k]`.
pub fn circle_of(rank: usize, layout: &CircleLayout) -> CirclePosition {
    layout
        .bounds
        .iter()
        .position(|&b| rank <= b)
        .map_or(CirclePosition::Overflow, CirclePosition::Circle)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleAssignment {
    pub ego: String,
    /// Index 0 is the innermost circle. Always one entry per layout bound.
    pub circles: Vec<Vec<String>>,
    pub overflow: Vec<String>,
}

impl CircleAssignment {
    /// Circle index of a friend (`circles.len()` for overflow).
    pub fn index_of(&self, friend: &str) -> Option<usize> {
        self.circles
            .iter()
            .position(|c| c.iter().any(|f| f == friend))
            .or_else(|| self.overflow.iter().any(|f| f == friend).then_some(self.circles.len()))
    }
}

pub fn assign_circles(
    ego: &str,
    ranking: &[String],
    layout: &CircleLayout,
) -> Result<CircleAssignment, CircleError> {
    let mut seen = HashSet::new();
    let mut circles = vec![Vec::new(); layout.len()];
    let mut overflow = Vec::new();
    for (idx, friend) in ranking.iter().enumerate() {
        if !seen.insert(friend.as_str()) {
            return Err(CircleError::DuplicateFriend(friend.clone()));
        }
        match circle_of(idx + 1, layout) {
            CirclePosition::Circle(k) => circles[k].push(friend.clone()),
            CirclePosition::Overflow => overflow.push(friend.clone()),
        }
    }
    Ok(CircleAssignment {
        ego: ego.to_string(),
        circles,
        overflow,
    })
}
