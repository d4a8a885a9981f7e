//! Line-delimited JSON session log.
//!
//! Line 1 is a header `{"schema":"mrin-session-log","version":1,"legend":"standard"}`.
//! Every following line is one session:
//!
//! ```text
//! {"session_id":"s0","initial":["----",...],
//!  "turns":[{"actor":"AGENT","changes":[{"x":1,"y":2,"before":"-","after":"E"}],"decisions":[]},
//!           {"actor":"HUMAN","changes":[],"decisions":[{"x":1,"y":2,"tile":"E","verdict":"KEEP"}]}],
//!  "final_level":["----",...]}
//! ```
//!
//! Grids are arrays of glyph rows and tiles are single glyphs, both via the
//! standard legend.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Actor, Decision, Session, SessionError, Turn, Verdict};
use crate::tilegrid::{Change, ChangeSet, Legend, TileGrid, TileId};

pub const LOG_SCHEMA: &str = "mrin-session-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: String,
    version: u32,
    legend: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeRecord {
    pub x: usize,
    pub y: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRecord {
    pub x: usize,
    pub y: usize,
    pub tile: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnRecord {
    pub actor: Actor,
    pub changes: Vec<ChangeRecord>,
    #[serde(default)]
    pub decisions: Vec<DecisionRecord>,
}

/// Wire form of a [`Session`]; also the body of the service's get-session response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRecord {
    pub session_id: String,
    pub initial: Vec<String>,
    pub turns: Vec<TurnRecord>,
    pub final_level: Vec<String>,
}

pub fn glyph_to_tile(glyph: &str, legend: &Legend) -> Result<TileId, String> {
    let mut chars = glyph.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => legend.tile(c).ok_or_else(|| format!("unknown glyph {c:?}")),
        _ => Err(format!("tile must be one glyph, got {glyph:?}")),
    }
}

pub fn tile_to_glyph(tile: TileId, legend: &Legend) -> String {
    legend.glyph(tile).to_string()
}

impl TurnRecord {
    pub fn from_turn(turn: &Turn) -> Self {
        let legend = Legend::standard();
        TurnRecord {
            actor: turn.actor,
            changes: turn
                .changes
                .iter()
                .map(|c| ChangeRecord {
                    x: c.x,
                    y: c.y,
                    before: tile_to_glyph(c.before, legend),
                    after: tile_to_glyph(c.after, legend),
                })
                .collect(),
            decisions: turn
                .decisions
                .iter()
                .map(|d| DecisionRecord {
                    x: d.x,
                    y: d.y,
                    tile: tile_to_glyph(d.tile, legend),
                    verdict: d.verdict,
                })
                .collect(),
        }
    }

    pub fn to_turn(&self) -> Result<Turn, String> {
        let legend = Legend::standard();
        let changes = self
            .changes
            .iter()
            .map(|c| {
                Ok(Change {
                    x: c.x,
                    y: c.y,
                    before: glyph_to_tile(&c.before, legend)?,
                    after: glyph_to_tile(&c.after, legend)?,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let decisions = self
            .decisions
            .iter()
            .map(|d| {
                Ok(Decision {
                    x: d.x,
                    y: d.y,
                    tile: glyph_to_tile(&d.tile, legend)?,
                    verdict: d.verdict,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(Turn {
            actor: self.actor,
            changes: ChangeSet::new(changes).map_err(|e| e.to_string())?,
            decisions,
        })
    }
}

impl SessionRecord {
    pub fn from_session(s: &Session) -> Self {
        let legend = Legend::standard();
        SessionRecord {
            session_id: s.session_id.clone(),
            initial: s.initial.to_rows(legend),
            turns: s.turns.iter().map(TurnRecord::from_turn).collect(),
            final_level: s.final_level.to_rows(legend),
        }
    }

    /// Converts and validates.
    pub fn to_session(&self) -> Result<Session, String> {
        let legend = Legend::standard();
        let session = Session {
            session_id: self.session_id.clone(),
            initial: TileGrid::from_rows(&self.initial, legend).map_err(|e| e.to_string())?,
            turns: self
                .turns
                .iter()
                .map(TurnRecord::to_turn)
                .collect::<Result<Vec<_>, String>>()?,
            final_level: TileGrid::from_rows(&self.final_level, legend)
                .map_err(|e| e.to_string())?,
        };
        session.validate().map_err(|e| e.to_string())?;
        Ok(session)
    }
}

fn header_line() -> String {
    serde_json::to_string(&Header {
        schema: LOG_SCHEMA.to_string(),
        version: LOG_VERSION,
        legend: "standard".to_string(),
    })
    .expect("header serializes")
}

/// Serializes sessions to the log text (header plus one line per session, each newline-terminated).
pub fn sessions_to_string(sessions: &[Session]) -> String {
    let mut out = header_line();
    out.push('\n');
    for s in sessions {
        out.push_str(
            &serde_json::to_string(&SessionRecord::from_session(s)).expect("record serializes"),
        );
        out.push('\n');
    }
    out
}

pub fn sessions_from_str(text: &str) -> Result<Vec<Session>, SessionError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(SessionError::SchemaViolation {
        line: 1,
        message: "missing header".into(),
    })?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| SessionError::SchemaViolation {
            line: 1,
            message: e.to_string(),
        })?;
    if header.schema != LOG_SCHEMA || header.version != LOG_VERSION || header.legend != "standard" {
        return Err(SessionError::SchemaViolation {
            line: 1,
            message: format!(
                "unsupported header {}/{}/{}",
                header.schema, header.version, header.legend
            ),
        });
    }
    let mut sessions = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let violation = |message: String| SessionError::SchemaViolation {
            line: i + 1,
            message,
        };
        let record: SessionRecord =
            serde_json::from_str(line).map_err(|e| violation(e.to_string()))?;
        sessions.push(record.to_session().map_err(violation)?);
    }
    Ok(sessions)
}

pub fn save_sessions(sessions: &[Session], path: &Path) -> Result<(), SessionError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(sessions_to_string(sessions).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn load_sessions(path: &Path) -> Result<Vec<Session>, SessionError> {
    sessions_from_str(&fs::read_to_string(path)?)
}
