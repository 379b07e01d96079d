//! Colley ratings.
//!
//! For friends indexed `0..n` in ID order the system `C r = b` is
//!
//! ```text
//! C[i][i] = 2 + t_i          C[i][j] = -n_ij   (i != j)
//! b[i]    = 1 + (w_i - l_i) / 2
//! ```
//!
//! where `n_ij` counts games between `i` and `j`, `t_i` is the friend's total
//! and `w_i`, `l_i` are wins and losses (ties count half to each). `C` is
//! strictly diagonally dominant with positive diagonal, so it is symmetric
//! positive definite and the solution is unique. With no games every rating
//! is exactly one half, and the ratings always sum to `n / 2`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::tournament::{TournamentError, TournamentRecord};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Ratings closer than this are treated as equal when ranking.
pub const RATING_TIE_QUANTUM: f64 = 1e-10;

const MAX_REFINEMENTS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ColleyError {
    #[error("the tournament has no friends to rate")]
    EmptyFriendSet,
    #[error("solver residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolveFailure { residual: f64, tolerance: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Tournament(#[from] TournamentError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColleySystem {
    friends: Vec<String>,
    c: DMatrix<f64>,
    b: DVector<f64>,
}

impl ColleySystem {
    pub fn friends(&self) -> &[String] {
        &self.friends
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.friends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.friends.is_empty()
    }

    /// `b - C r` evaluated as `b_i - 2 r_i - sum_j n_ij (r_i - r_j)`.
    ///
    /// The Laplacian form avoids cancelling the large diagonal against the
    /// off-diagonal sum, which matters once friends have played many
    /// thousands of games.
    fn residual_vector(&self, r: &DVector<f64>) -> DVector<f64> {
        let n = self.len();
        DVector::from_fn(n, |i, _| {
            let mut acc = self.b[i] - 2.0 * r[i];
            for j in 0..n {
                if j != i {
                    let n_ij = -self.c[(i, j)];
                    if n_ij != 0.0 {
                        acc -= n_ij * (r[i] - r[j]);
                    }
                }
            }
            acc
        })
    }

    /// `||C r - b||_inf`.
    pub fn residual(&self, r: &DVector<f64>) -> f64 {
        self.residual_vector(r).amax()
    }
}

/// Assembles `C` and `b` with friends in ID order.
pub fn build_system(record: &TournamentRecord) -> Result<ColleySystem, ColleyError> {
    if record.is_empty() {
        return Err(ColleyError::EmptyFriendSet);
    }
    let friends: Vec<String> = record.friends().map(str::to_string).collect();
    let n = friends.len();
    let mut c = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (i, fi) in friends.iter().enumerate() {
        c[(i, i)] = 2.0 + record.total_games(fi)? as f64;
        b[i] = 1.0 + (record.wins(fi)? - record.losses(fi)?) / 2.0;
        for (j, fj) in friends.iter().enumerate().skip(i + 1) {
            let n_ij = record.games_between(fi, fj)? as f64;
            c[(i, j)] = -n_ij;
            c[(j, i)] = -n_ij;
        }
    }
    Ok(ColleySystem { friends, c, b })
}

/// Ratings plus the ranking derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingResult {
    pub ratings: BTreeMap<String, f64>,
    /// Best first.
    pub ranking: Vec<String>,
    pub residual: f64,
}

fn quantized(rating: f64) -> i64 {
    (rating / RATING_TIE_QUANTUM).round() as i64
}

impl RatingResult {
    /// Orders friends by descending rating, then descending `secondary`, then ID.
    fn rank_by<F>(ratings: BTreeMap<String, f64>, residual: f64, secondary: F) -> Self
    where
        F: Fn(&str) -> f64,
    {
        let mut ranking: Vec<String> = ratings.keys().cloned().collect();
        ranking.sort_by(|a, b| {
            quantized(ratings[b])
                .cmp(&quantized(ratings[a]))
                .then_with(|| secondary(b).partial_cmp(&secondary(a)).unwrap_or(Ordering::Equal))
                .then_with(|| a.cmp(b))
        });
        RatingResult {
            ratings,
            ranking,
            residual,
        }
    }

    pub fn rating(&self, friend: &str) -> Option<f64> {
        self.ratings.get(friend).copied()
    }

    /// 1-based rank of a friend.
    pub fn rank_of(&self, friend: &str) -> Option<usize> {
        self.ranking.iter().position(|f| f == friend).map(|p| p + 1)
    }

    pub fn to_file(&self, ego: &str) -> RatingsFile {
        RatingsFile {
            ego: ego.to_string(),
            ratings: self
                .ranking
                .iter()
                .map(|f| FriendRating {
                    friend: f.clone(),
                    rating: self.ratings[f],
                })
                .collect(),
            residual: self.residual,
        }
    }
}

fn solve_ratings(system: &ColleySystem, tolerance: f64) -> Result<(DVector<f64>, f64), ColleyError> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(ColleyError::InvalidTolerance(tolerance));
    }
    let n = system.len();
    if n == 0 {
        return Err(ColleyError::EmptyFriendSet);
    }
    if n == 1 {
        return Ok((DVector::from_element(1, 0.5), 0.0));
    }
    let chol = system
        .c
        .clone()
        .cholesky()
        .ok_or(ColleyError::SolveFailure {
            residual: f64::INFINITY,
            tolerance,
        })?;
    let mut r = chol.solve(&system.b);
    let mut residual = system.residual(&r);
    for _ in 0..MAX_REFINEMENTS {
        if residual == 0.0 {
            break;
        }
        let correction = chol.solve(&system.residual_vector(&r));
        let candidate = &r + correction;
        let candidate_residual = system.residual(&candidate);
        if candidate_residual >= residual {
            break;
        }
        r = candidate;
        residual = candidate_residual;
    }
    if residual.is_nan() || residual > tolerance {
        return Err(ColleyError::SolveFailure {
            residual,
            tolerance,
        });
    }
    Ok((r, residual))
}

/// Solves the system; equal ratings are ordered by friend ID.
pub fn solve(system: &ColleySystem, tolerance: f64) -> Result<RatingResult, ColleyError> {
    let (r, residual) = solve_ratings(system, tolerance)?;
    let ratings = system.friends.iter().cloned().zip(r.iter().copied()).collect();
    Ok(RatingResult::rank_by(ratings, residual, |_| 0.0))
}

/// Closed-form `(1 + w_i) / (2 + t_i)`, with tie halves included in `w_i`.
pub fn laplace_rating(record: &TournamentRecord, friend: &str) -> Result<f64, ColleyError> {
    let wins = record.wins(friend)?;
    let total = record.total_games(friend)? as f64;
    Ok((1.0 + wins) / (2.0 + total))
}

/// Builds and solves the system for a record. Equal ratings are ordered by
/// lifetime interaction value (higher first), then friend ID.
pub fn rank_friends(record: &TournamentRecord, tolerance: f64) -> Result<RatingResult, ColleyError> {
    let system = build_system(record)?;
    let (r, residual) = solve_ratings(&system, tolerance)?;
    let ratings: BTreeMap<String, f64> = system.friends.iter().cloned().zip(r.iter().copied()).collect();
    Ok(RatingResult::rank_by(ratings, residual, |f| {
        record.lifetime_value(f).unwrap_or(0.0)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriendRating {
    pub friend: String,
    #[serde(serialize_with = "crate::fixed::six_places")]
    pub rating: f64,
}

/// On-disk ratings: best first, ratings printed with six decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingsFile {
    pub ego: String,
    pub ratings: Vec<FriendRating>,
    #[serde(serialize_with = "crate::fixed::scientific")]
    pub residual: f64,
}
