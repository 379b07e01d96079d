//! Result files and the DOT export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ego_ranker_core::circles::CircleAssignment;
use ego_ranker_core::colley::RatingsFile;
use ego_ranker_core::pipeline::EgoResult;
use serde::Serialize;

use crate::state::write_atomic;
use crate::CliError;

/// File-name-safe form of a user ID: ASCII alphanumerics, `_` and `-` pass
/// through, every other byte becomes `%XX`.
pub fn encode_name(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for b in id.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

pub fn decode_name(name: &str) -> Option<String> {
    let bytes = name.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = name.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("result serializes");
    text.push('\n');
    text
}

pub fn ratings_path(out: &Path, ego: &str) -> PathBuf {
    out.join(format!("{}.ratings.json", encode_name(ego)))
}

pub fn circles_path(out: &Path, ego: &str) -> PathBuf {
    out.join(format!("{}.circles.json", encode_name(ego)))
}

/// Writes `<ego>.ratings.json` and `<ego>.circles.json` under `out`.
pub fn write_result(out: &Path, result: &EgoResult) -> Result<(), CliError> {
    let ego = result.ego();
    write_atomic(
        &ratings_path(out, ego),
        to_pretty_json(&result.ratings.to_file(ego)).as_bytes(),
    )?;
    write_atomic(&circles_path(out, ego), to_pretty_json(&result.circles).as_bytes())
}

const PALETTE: [&str; 6] = ["#d7301f", "#fc8d59", "#fdcc8a", "#fef0d9", "#c6dbef", "#eff3ff"];
const OVERFLOW_COLOR: &str = "#bdbdbd";

fn quoted(id: &str) -> String {
    format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Star graph centred on the ego. Nodes follow the ranking; each carries its
/// circle index and a fill colour, each edge the friend's rating.
pub fn render_dot(ratings: &RatingsFile, circles: &CircleAssignment) -> Result<String, CliError> {
    if ratings.ego != circles.ego {
        return Err(CliError::Input(format!(
            "ratings are for `{}` but circles are for `{}`",
            ratings.ego, circles.ego
        )));
    }
    let placed: usize = circles.circles.iter().map(Vec::len).sum::<usize>() + circles.overflow.len();
    if placed != ratings.ratings.len() {
        return Err(CliError::Input(format!(
            "{} rated friends but {} placed in circles",
            ratings.ratings.len(),
            placed
        )));
    }
    let mut dot = String::new();
    let _ = writeln!(dot, "graph {} {{", quoted(&ratings.ego));
    let _ = writeln!(dot, "  node [style=filled];");
    let _ = writeln!(dot, "  {} [shape=doublecircle, fillcolor=\"#ffffff\"];", quoted(&ratings.ego));
    for entry in &ratings.ratings {
        let circle = circles.index_of(&entry.friend).ok_or_else(|| {
            CliError::Input(format!("friend `{}` has no circle", entry.friend))
        })?;
        let color = if circle < circles.circles.len() {
            PALETTE[circle.min(PALETTE.len() - 1)]
        } else {
            OVERFLOW_COLOR
        };
        let _ = writeln!(
            dot,
            "  {} [circle={circle}, fillcolor=\"{color}\"];",
            quoted(&entry.friend)
        );
    }
    for entry in &ratings.ratings {
        let _ = writeln!(
            dot,
            "  {} -- {} [label=\"{:.6}\"];",
            quoted(&ratings.ego),
            quoted(&entry.friend),
            entry.rating
        );
    }
    dot.push_str("}\n");
    Ok(dot)
}
