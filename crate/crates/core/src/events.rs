//! Interaction events and the parsers that read them from CSV and JSON-lines logs.
//!
//! An event is an undirected record of one interaction between two users:
//!
//! ```text
//! user_a,user_b,timestamp,itype[,size]
//! alice,bob,1000,call
//! zed,ann,5,message,2048
//! ```
//!
//! The dyad is stored in lexicographic order, so `zed,ann` and `ann,zed`
//! describe the same pair. `size` is only meaningful for messages and is
//! forced to zero for every other type.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// The four kinds of interaction a log can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionType {
    FaceToFace,
    Video,
    Call,
    Message,
}

impl InteractionType {
    pub const ALL: [InteractionType; 4] = [
        InteractionType::FaceToFace,
        InteractionType::Video,
        InteractionType::Call,
        InteractionType::Message,
    ];

    /// Canonical token written by the serializers.
    pub fn token(self) -> &'static str {
        match self {
            InteractionType::FaceToFace => "face_to_face",
            InteractionType::Video => "video",
            InteractionType::Call => "call",
            InteractionType::Message => "message",
        }
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for InteractionType {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "face_to_face" | "f2f" => Ok(InteractionType::FaceToFace),
            "video" => Ok(InteractionType::Video),
            "call" | "phone" => Ok(InteractionType::Call),
            "message" | "email" | "text" => Ok(InteractionType::Message),
            _ => Err(RecordError::UnknownInteractionType(s.trim().to_string())),
        }
    }
}

/// Input encoding of an event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

/// Why a single record was rejected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("unknown interaction type `{0}`")]
    UnknownInteractionType(String),
    #[error("user `{0}` interacts with themselves")]
    SelfInteraction(String),
    #[error("negative timestamp {0}")]
    NegativeTimestamp(String),
}

/// A rejected record together with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {cause}")]
pub struct LineError {
    pub line: usize,
    pub cause: RecordError,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read event log: {0}")]
    Io(#[from] std::io::Error),
    #[error("{} malformed record(s), first at {}", .0.len(), .0[0])]
    Parse(Vec<LineError>),
}

/// Strict parsing fails the whole load on the first bad record; lenient
/// parsing skips bad records and reports them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

/// One interaction between two distinct users.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InteractionEvent {
    pub user_a: String,
    pub user_b: String,
    pub timestamp: u64,
    pub itype: InteractionType,
    pub size: u64,
}

impl InteractionEvent {
    /// Validates the record and puts the dyad into canonical order.
    pub fn new(
        a: impl Into<String>,
        b: impl Into<String>,
        timestamp: u64,
        itype: InteractionType,
        size: u64,
    ) -> Result<Self, RecordError> {
        let (a, b) = (a.into(), b.into());
        if a.is_empty() || b.is_empty() {
            return Err(RecordError::MalformedRecord("empty user id".into()));
        }
        if a == b {
            return Err(RecordError::SelfInteraction(a));
        }
        let (user_a, user_b) = if a <= b { (a, b) } else { (b, a) };
        let size = if itype == InteractionType::Message { size } else { 0 };
        Ok(InteractionEvent {
            user_a,
            user_b,
            timestamp,
            itype,
            size,
        })
    }

    pub fn involves(&self, user: &str) -> bool {
        self.user_a == user || self.user_b == user
    }

    /// The other side of the dyad, if `user` is part of it.
    pub fn peer_of(&self, user: &str) -> Option<&str> {
        if self.user_a == user {
            Some(&self.user_b)
        } else if self.user_b == user {
            Some(&self.user_a)
        } else {
            None
        }
    }

    /// CSV line without trailing newline; always includes the size column.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.user_a,
            self.user_b,
            self.timestamp,
            self.itype.token(),
            self.size
        )
    }
}

fn parse_timestamp(raw: &str) -> Result<u64, RecordError> {
    let raw = raw.trim();
    if let Ok(ts) = raw.parse::<u64>() {
        return Ok(ts);
    }
    match raw.parse::<i128>() {
        Ok(v) if v < 0 => Err(RecordError::NegativeTimestamp(raw.to_string())),
        _ => Err(RecordError::MalformedRecord(format!(
            "unparseable timestamp `{raw}`"
        ))),
    }
}

fn parse_size(raw: &str) -> Result<u64, RecordError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(0);
    }
    raw.parse::<u64>()
        .map_err(|_| RecordError::MalformedRecord(format!("unparseable size `{raw}`")))
}

fn parse_csv_line(line: &str) -> Result<InteractionEvent, RecordError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if !(4..=5).contains(&fields.len()) {
        return Err(RecordError::MalformedRecord(format!(
            "expected 4 or 5 columns, found {}",
            fields.len()
        )));
    }
    let timestamp = parse_timestamp(fields[2])?;
    let itype: InteractionType = fields[3].parse()?;
    let size = fields.get(4).map_or(Ok(0), |s| parse_size(s))?;
    InteractionEvent::new(fields[0], fields[1], timestamp, itype, size)
}

#[derive(Deserialize)]
struct JsonRecord {
    a: String,
    b: String,
    ts: serde_json::Number,
    #[serde(rename = "type")]
    itype: String,
    #[serde(default)]
    size: Option<u64>,
}

fn parse_json_line(line: &str) -> Result<InteractionEvent, RecordError> {
    let rec: JsonRecord = serde_json::from_str(line)
        .map_err(|e| RecordError::MalformedRecord(e.to_string()))?;
    let timestamp = match (rec.ts.as_u64(), rec.ts.as_i64()) {
        (Some(ts), _) => ts,
        (None, Some(neg)) => return Err(RecordError::NegativeTimestamp(neg.to_string())),
        _ => {
            return Err(RecordError::MalformedRecord(format!(
                "timestamp `{}` is not an integer",
                rec.ts
            )))
        }
    };
    let itype: InteractionType = rec.itype.parse()?;
    InteractionEvent::new(rec.a, rec.b, timestamp, itype, rec.size.unwrap_or(0))
}

/// Parses one record in the given format.
pub fn parse_event_line(line: &str, format: Format) -> Result<InteractionEvent, RecordError> {
    match format {
        Format::Csv => parse_csv_line(line),
        Format::Jsonl => parse_json_line(line),
    }
}

/// A header row is recognised by a non-numeric timestamp column.
fn is_csv_header(line: &str) -> bool {
    line.split(',')
        .nth(2)
        .is_some_and(|ts| ts.trim().parse::<i128>().is_err())
}

/// Validated events in timestamp order plus a digest of the raw bytes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventStream {
    events: Vec<InteractionEvent>,
    source_digest: String,
}

impl EventStream {
    /// Sorts `events` stably by timestamp.
    pub fn new(mut events: Vec<InteractionEvent>, source_digest: String) -> Self {
        events.sort_by_key(|e| e.timestamp);
        EventStream {
            events,
            source_digest,
        }
    }

    /// Builds a stream whose digest is taken over its own CSV serialization.
    pub fn from_events(events: Vec<InteractionEvent>) -> Self {
        let mut stream = EventStream::new(events, String::new());
        stream.source_digest = digest_bytes(stream.to_csv().as_bytes());
        stream
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn source_digest(&self) -> &str {
        &self.source_digest
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn min_timestamp(&self) -> Option<u64> {
        self.events.first().map(|e| e.timestamp)
    }

    /// Every user appearing on either side of any event, sorted.
    pub fn users(&self) -> BTreeSet<&str> {
        self.events
            .iter()
            .flat_map(|e| [e.user_a.as_str(), e.user_b.as_str()])
            .collect()
    }

    /// Serializes the stream as CSV with a size column and no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_csv_line());
            out.push('\n');
        }
        out
    }
}

/// Hex-encoded SHA-256.
pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Result of a load: the stream and any records skipped in lenient mode.
#[derive(Debug, Clone)]
pub struct LoadedStream {
    pub stream: EventStream,
    pub rejected: Vec<LineError>,
}

/// Parses an in-memory log. Blank lines are ignored.
pub fn parse_stream(bytes: &[u8], format: Format, mode: ParseMode) -> Result<LoadedStream, LoadError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    let mut events = Vec::new();
    let mut rejected = Vec::new();
    let mut seen_record = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = !seen_record;
        seen_record = true;
        if first && format == Format::Csv && is_csv_header(line) {
            continue;
        }
        match parse_event_line(line, format) {
            Ok(ev) => events.push(ev),
            Err(cause) => rejected.push(LineError {
                line: idx + 1,
                cause,
            }),
        }
    }
    if mode == ParseMode::Strict && !rejected.is_empty() {
        return Err(LoadError::Parse(rejected));
    }
    Ok(LoadedStream {
        stream: EventStream::new(events, digest_bytes(bytes)),
        rejected,
    })
}

/// Reads and parses an event log from disk.
pub fn load_stream(path: &Path, format: Format, mode: ParseMode) -> Result<LoadedStream, LoadError> {
    let bytes = std::fs::read(path)?;
    parse_stream(&bytes, format, mode)
}
