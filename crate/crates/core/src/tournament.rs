//! Pairwise games between an ego's friends.
//!
//! Within every window each pair of known friends is compared by interaction
//! value. The larger value wins; equal nonzero values tie and credit half a
//! win and half a loss to each side; a pair where both values are zero plays
//! no game at all. A [`TournamentRecord`] accumulates these games across
//! windows and is the only input the Colley system needs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TournamentError {
    #[error("friend `{0}` is not registered in the tournament")]
    UnknownFriend(String),
    #[error("inconsistent tournament snapshot: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameResult {
    IWins,
    JWins,
    Tie,
}

/// One comparison; `friend_i < friend_j` always holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub friend_i: String,
    pub friend_j: String,
    pub window: u64,
    pub result: GameResult,
}

impl GameOutcome {
    /// Orders the pair canonically, flipping the result if needed.
    pub fn new(a: &str, b: &str, window: u64, a_value: f64, b_value: f64) -> Self {
        let (friend_i, friend_j, vi, vj) = if a <= b {
            (a, b, a_value, b_value)
        } else {
            (b, a, b_value, a_value)
        };
        GameOutcome {
            friend_i: friend_i.to_string(),
            friend_j: friend_j.to_string(),
            window,
            result: compare(vi, vj),
        }
    }
}

fn compare(vi: f64, vj: f64) -> GameResult {
    if vi > vj {
        GameResult::IWins
    } else if vj > vi {
        GameResult::JWins
    } else {
        GameResult::Tie
    }
}

/// Games for one window. `values` must cover every known friend; a friend
/// with no activity should be present with value 0.
pub fn window_games(values: &BTreeMap<String, f64>, window: u64) -> Vec<GameOutcome> {
    let entries: Vec<(&String, f64)> = values.iter().map(|(k, v)| (k, *v)).collect();
    let mut games = Vec::new();
    for (i, (fi, vi)) in entries.iter().enumerate() {
        for (fj, vj) in &entries[i + 1..] {
            if vi.max(*vj) > 0.0 {
                games.push(GameOutcome::new(fi, fj, window, *vi, *vj));
            }
        }
    }
    games
}

/// Accumulated game statistics for one ego.
///
/// Friends are stored in dense slots (registration order); every observable
/// output is keyed or sorted by friend ID so slot order never leaks.
#[derive(Debug, Clone, PartialEq)]
pub struct TournamentRecord {
    ego: String,
    slots: BTreeMap<String, usize>,
    names: Vec<String>,
    pair_games: Vec<Vec<u64>>,
    wins: Vec<f64>,
    losses: Vec<f64>,
    lifetime: Vec<f64>,
    windows_processed: u64,
}

impl TournamentRecord {
    pub fn new(ego: impl Into<String>) -> Self {
        TournamentRecord {
            ego: ego.into(),
            slots: BTreeMap::new(),
            names: Vec::new(),
            pair_games: Vec::new(),
            wins: Vec::new(),
            losses: Vec::new(),
            lifetime: Vec::new(),
            windows_processed: 0,
        }
    }

    pub fn ego(&self) -> &str {
        &self.ego
    }

    /// Friends in ID order.
    pub fn friends(&self) -> impl Iterator<Item = &str> {
        self.slots.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, friend: &str) -> bool {
        self.slots.contains_key(friend)
    }

    pub fn windows_processed(&self) -> u64 {
        self.windows_processed
    }

    fn slot(&self, friend: &str) -> Result<usize, TournamentError> {
        self.slots
            .get(friend)
            .copied()
            .ok_or_else(|| TournamentError::UnknownFriend(friend.to_string()))
    }

    /// `n_ij`: games played between two friends.
    pub fn games_between(&self, a: &str, b: &str) -> Result<u64, TournamentError> {
        Ok(self.pair_games[self.slot(a)?][self.slot(b)?])
    }

    /// `t_i`: total games played by a friend.
    pub fn total_games(&self, friend: &str) -> Result<u64, TournamentError> {
        Ok(self.pair_games[self.slot(friend)?].iter().sum())
    }

    pub fn wins(&self, friend: &str) -> Result<f64, TournamentError> {
        Ok(self.wins[self.slot(friend)?])
    }

    pub fn losses(&self, friend: &str) -> Result<f64, TournamentError> {
        Ok(self.losses[self.slot(friend)?])
    }

    /// Sum of the friend's interaction values over all played windows.
    pub fn lifetime_value(&self, friend: &str) -> Result<f64, TournamentError> {
        Ok(self.lifetime[self.slot(friend)?])
    }

    /// Adds friends with zero statistics. Already known friends are left alone.
    pub fn register_friends<'a, I>(&mut self, friends: I)
    where
        I: IntoIterator<Item = &'a str>,
    {
        for friend in friends {
            if self.slots.contains_key(friend) {
                continue;
            }
            let slot = self.names.len();
            self.slots.insert(friend.to_string(), slot);
            self.names.push(friend.to_string());
            for row in &mut self.pair_games {
                row.push(0);
            }
            self.pair_games.push(vec![0; slot + 1]);
            self.wins.push(0.0);
            self.losses.push(0.0);
            self.lifetime.push(0.0);
        }
    }

    fn apply(&mut self, i: usize, j: usize, result: GameResult) {
        self.pair_games[i][j] += 1;
        self.pair_games[j][i] += 1;
        match result {
            GameResult::IWins => {
                self.wins[i] += 1.0;
                self.losses[j] += 1.0;
            }
            GameResult::JWins => {
                self.wins[j] += 1.0;
                self.losses[i] += 1.0;
            }
            GameResult::Tie => {
                self.wins[i] += 0.5;
                self.losses[i] += 0.5;
                self.wins[j] += 0.5;
                self.losses[j] += 0.5;
            }
        }
    }

    /// Folds a batch of games into the record. Either every game is applied
    /// or, when a game names an unregistered friend, none is.
    pub fn accumulate(&mut self, games: &[GameOutcome]) -> Result<(), TournamentError> {
        let resolved = games
            .iter()
            .map(|g| Ok((self.slot(&g.friend_i)?, self.slot(&g.friend_j)?, g.result)))
            .collect::<Result<Vec<_>, TournamentError>>()?;
        for (i, j, result) in resolved {
            self.apply(i, j, result);
        }
        let windows: BTreeSet<u64> = games.iter().map(|g| g.window).collect();
        self.windows_processed += windows.len() as u64;
        Ok(())
    }

    /// Plays one window directly from interaction values.
    ///
    /// Equivalent to `accumulate(&window_games(values_over_all_friends, w))`
    /// but works on slots, and also adds each value to the friend's lifetime
    /// total. Every key in `values` must be registered. Returns the number of
    /// games played.
    pub fn play_window(&mut self, values: &BTreeMap<String, f64>) -> Result<usize, TournamentError> {
        let mut dense = vec![0.0; self.names.len()];
        for (friend, value) in values {
            dense[self.slot(friend)?] = *value;
        }
        let mut played = 0;
        for i in 0..dense.len() {
            for j in (i + 1)..dense.len() {
                if dense[i].max(dense[j]) > 0.0 {
                    self.apply(i, j, compare(dense[i], dense[j]));
                    played += 1;
                }
            }
        }
        for (slot, value) in dense.iter().enumerate() {
            self.lifetime[slot] += value;
        }
        if played > 0 {
            self.windows_processed += 1;
        }
        Ok(played)
    }

    /// Checks the conservation invariants exactly.
    pub fn check_invariants(&self) -> Result<(), TournamentError> {
        let n = self.names.len();
        let mut total_w = 0.0;
        let mut total_l = 0.0;
        for i in 0..n {
            if self.pair_games[i][i] != 0 {
                return Err(TournamentError::Inconsistent(format!(
                    "`{}` has games against themselves",
                    self.names[i]
                )));
            }
            for j in 0..n {
                if self.pair_games[i][j] != self.pair_games[j][i] {
                    return Err(TournamentError::Inconsistent("pair counts are asymmetric".into()));
                }
            }
            let t: u64 = self.pair_games[i].iter().sum();
            if self.wins[i] < 0.0 || self.losses[i] < 0.0 || self.wins[i] + self.losses[i] != t as f64 {
                return Err(TournamentError::Inconsistent(format!(
                    "wins + losses != games for `{}`",
                    self.names[i]
                )));
            }
            total_w += self.wins[i];
            total_l += self.losses[i];
        }
        if total_w != total_l {
            return Err(TournamentError::Inconsistent("total wins != total losses".into()));
        }
        Ok(())
    }
}

/// Serialized form of a record: sorted friends and canonically sorted pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordSnapshot {
    pub ego: String,
    pub friends: Vec<String>,
    pub pairs: Vec<(String, String, u64)>,
    pub wins: BTreeMap<String, f64>,
    pub losses: BTreeMap<String, f64>,
    pub lifetime_values: BTreeMap<String, f64>,
    pub windows_processed: u64,
}

impl From<&TournamentRecord> for RecordSnapshot {
    fn from(r: &TournamentRecord) -> Self {
        let mut pairs = Vec::new();
        for (a, &i) in &r.slots {
            for (b, &j) in r.slots.range::<String, _>((std::ops::Bound::Excluded(a), std::ops::Bound::Unbounded)) {
                let n = r.pair_games[i][j];
                if n > 0 {
                    pairs.push((a.clone(), b.clone(), n));
                }
            }
        }
        let by_name = |v: &Vec<f64>| -> BTreeMap<String, f64> {
            r.slots.iter().map(|(k, &s)| (k.clone(), v[s])).collect()
        };
        RecordSnapshot {
            ego: r.ego.clone(),
            friends: r.slots.keys().cloned().collect(),
            pairs,
            wins: by_name(&r.wins),
            losses: by_name(&r.losses),
            lifetime_values: by_name(&r.lifetime),
            windows_processed: r.windows_processed,
        }
    }
}

impl TryFrom<RecordSnapshot> for TournamentRecord {
    type Error = TournamentError;

    fn try_from(s: RecordSnapshot) -> Result<Self, Self::Error> {
        let mut r = TournamentRecord::new(s.ego);
        r.register_friends(s.friends.iter().map(String::as_str));
        if r.len() != s.friends.len() {
            return Err(TournamentError::Inconsistent("duplicate friend".into()));
        }
        for (a, b, n) in &s.pairs {
            if a >= b {
                return Err(TournamentError::Inconsistent(format!(
                    "pair ({a}, {b}) is not in canonical order"
                )));
            }
            let (i, j) = (r.slot(a)?, r.slot(b)?);
            r.pair_games[i][j] = *n;
            r.pair_games[j][i] = *n;
        }
        for (map, target) in [
            (&s.wins, &mut r.wins),
            (&s.losses, &mut r.losses),
            (&s.lifetime_values, &mut r.lifetime),
        ] {
            if map.len() != s.friends.len() {
                return Err(TournamentError::Inconsistent(
                    "per-friend maps do not match the friend list".into(),
                ));
            }
            for (friend, value) in map {
                let slot = r
                    .slots
                    .get(friend)
                    .copied()
                    .ok_or_else(|| TournamentError::UnknownFriend(friend.clone()))?;
                target[slot] = *value;
            }
        }
        r.windows_processed = s.windows_processed;
        r.check_invariants()?;
        Ok(r)
    }
}

impl Serialize for TournamentRecord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RecordSnapshot::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TournamentRecord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let snapshot = RecordSnapshot::deserialize(deserializer)?;
        TournamentRecord::try_from(snapshot).map_err(serde::de::Error::custom)
    }
}
