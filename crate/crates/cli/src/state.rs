//! On-disk session state for incremental ingestion.
//!
//! ```text
//! <state_dir>/session.json        window spec and weights fixed by the first batch
//! <state_dir>/digests.log         one line per ingested batch: "<sha256> <events>"
//! <state_dir>/egos/<ego>.json     {"checksum": "<sha256 of tracker>", "tracker": {...}}
//! ```
//!
//! Every file is written to a temporary sibling and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ego_ranker_core::events::digest_bytes;
use ego_ranker_core::pipeline::EgoTracker;
use ego_ranker_core::scoring::{InteractionWeights, WindowSpec};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::output::{decode_name, encode_name};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    pub window: WindowSpec,
    pub weights: InteractionWeights,
}

#[derive(Serialize, Deserialize)]
struct Snapshot<'a> {
    checksum: String,
    #[serde(borrow)]
    tracker: &'a RawValue,
}

pub struct StateDir {
    root: PathBuf,
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let parent = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| CliError::io("cannot create", parent, e))?;
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = parent.join(format!(".{file_name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io("cannot write", &tmp, e))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(|e| CliError::io("cannot write", &tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io("cannot replace", path, e))
}

impl StateDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        StateDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_path(&self) -> PathBuf {
        self.root.join("session.json")
    }

    fn digest_log(&self) -> PathBuf {
        self.root.join("digests.log")
    }

    fn ego_dir(&self) -> PathBuf {
        self.root.join("egos")
    }

    fn ego_path(&self, ego: &str) -> PathBuf {
        self.ego_dir().join(format!("{}.json", encode_name(ego)))
    }

    pub fn load_session(&self) -> Result<Option<Session>, CliError> {
        let path = self.session_path();
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| CliError::Input(format!("corrupt state {}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CliError::io("cannot read", &path, e)),
        }
    }

    pub fn save_session(&self, session: &Session) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(session).expect("session serializes");
        write_atomic(&self.session_path(), format!("{text}\n").as_bytes())
    }

    /// Digests of previously ingested batches.
    pub fn seen_digests(&self) -> Result<Vec<String>, CliError> {
        let path = self.digest_log();
        match fs::read_to_string(&path) {
            Ok(text) => Ok(text
                .lines()
                .filter_map(|l| l.split_whitespace().next())
                .map(str::to_string)
                .collect()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(CliError::io("cannot read", &path, e)),
        }
    }

    pub fn append_digest(&self, digest: &str, events: usize) -> Result<(), CliError> {
        fs::create_dir_all(&self.root).map_err(|e| CliError::io("cannot create", &self.root, e))?;
        let path = self.digest_log();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| CliError::io("cannot open", &path, e))?;
        writeln!(f, "{digest} {events}").map_err(|e| CliError::io("cannot append to", &path, e))
    }

    pub fn load_tracker(&self, ego: &str) -> Result<Option<EgoTracker>, CliError> {
        let path = self.ego_path(ego);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CliError::io("cannot read", &path, e)),
        };
        let corrupt = |why: String| CliError::Input(format!("corrupt snapshot {}: {why}", path.display()));
        let snapshot: Snapshot = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        if digest_bytes(snapshot.tracker.get().as_bytes()) != snapshot.checksum {
            return Err(corrupt("checksum mismatch".into()));
        }
        let tracker: EgoTracker =
            serde_json::from_str(snapshot.tracker.get()).map_err(|e| corrupt(e.to_string()))?;
        if tracker.ego() != ego {
            return Err(corrupt(format!("snapshot belongs to `{}`", tracker.ego())));
        }
        Ok(Some(tracker))
    }

    pub fn save_tracker(&self, tracker: &EgoTracker) -> Result<(), CliError> {
        let body = serde_json::to_string(tracker).expect("tracker serializes");
        let text = format!(
            "{{\"checksum\":\"{}\",\"tracker\":{}}}\n",
            digest_bytes(body.as_bytes()),
            body
        );
        write_atomic(&self.ego_path(tracker.ego()), text.as_bytes())
    }

    /// Every ego with a snapshot, sorted.
    pub fn egos(&self) -> Result<Vec<String>, CliError> {
        let dir = self.ego_dir();
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(CliError::io("cannot list", &dir, e)),
        };
        let mut egos = BTreeMap::new();
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io("cannot list", &dir, e))?;
            let name = entry.file_name();
            let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if stem.starts_with('.') {
                continue;
            }
            if let Some(ego) = decode_name(stem) {
                egos.insert(ego, ());
            }
        }
        Ok(egos.into_keys().collect())
    }
}
