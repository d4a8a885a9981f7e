use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::GridError;

/// Number of distinct tile IDs a level state can hold.
pub const STATE_CHANNELS: usize = 34;
/// Number of tile IDs an action may place (everything except PLAYER and FLAG).
pub const ACTION_CHANNELS: usize = 32;

/// Identifier of one level component, in `0..34`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TileId(u8);

impl TileId {
    pub const EMPTY: TileId = TileId(0);
    pub const GROUND: TileId = TileId(1);
    pub const BRICK: TileId = TileId(2);
    pub const QUESTION_BLOCK: TileId = TileId(3);
    pub const COIN: TileId = TileId(7);
    pub const PIPE_TOP_LEFT: TileId = TileId(8);
    pub const PIPE_TOP_RIGHT: TileId = TileId(9);
    pub const PIPE_BODY_LEFT: TileId = TileId(10);
    pub const PIPE_BODY_RIGHT: TileId = TileId(11);
    pub const GOOMBA: TileId = TileId(12);
    pub const TREE_TOP: TileId = TileId(23);
    pub const TREE_TRUNK: TileId = TileId(24);
    pub const STAIR_BLOCK: TileId = TileId(29);
    pub const PLAYER: TileId = TileId(32);
    pub const FLAG: TileId = TileId(33);

    pub fn new(id: u8) -> Result<Self, GridError> {
        if (id as usize) < STATE_CHANNELS {
            Ok(TileId(id))
        } else {
            Err(GridError::InvalidTile(id))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn raw(self) -> u8 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self == TileId::EMPTY
    }

    /// Whether an action (agent addition) may place this tile.
    pub fn is_placeable(self) -> bool {
        self != TileId::PLAYER && self != TileId::FLAG
    }

    /// All 34 state IDs in ascending order.
    pub fn all() -> impl Iterator<Item = TileId> {
        (0..STATE_CHANNELS as u8).map(TileId)
    }
}

impl TryFrom<u8> for TileId {
    type Error = GridError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        TileId::new(v)
    }
}

impl From<TileId> for u8 {
    fn from(t: TileId) -> u8 {
        t.0
    }
}

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Legend::standard().name(*self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegendEntry {
    pub id: TileId,
    pub name: String,
    pub glyph: char,
}

/// Bidirectional mapping between tile IDs, names and text glyphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Legend {
    entries: Vec<LegendEntry>,
    by_glyph: HashMap<char, TileId>,
}

const STANDARD_LEGEND: &str = include_str!("../../data/legend.txt");

impl Legend {
    /// The fixed 34-entry legend shipped with the crate.
    pub fn standard() -> &'static Legend {
        static LEGEND: OnceLock<Legend> = OnceLock::new();
        LEGEND.get_or_init(|| Legend::parse(STANDARD_LEGEND).expect("bundled legend is valid"))
    }

    /// Parses the key-value legend format: one `id=.. name=.. glyph=..` line per tile.
    /// Blank lines and lines starting with `#` are ignored. All 34 IDs must be present
    /// exactly once, and glyphs must be unique.
    pub fn parse(text: &str) -> Result<Legend, GridError> {
        let mut slots: Vec<Option<LegendEntry>> = vec![None; STATE_CHANNELS];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| GridError::BadLegend {
                line: lineno + 1,
                message: msg.to_string(),
            };
            let (mut id, mut name, mut glyph) = (None, None, None);
            for token in line.split_whitespace() {
                let (key, value) = token
                    .split_once('=')
                    .ok_or_else(|| bad("expected key=value"))?;
                match key {
                    "id" => {
                        id = Some(
                            value
                                .parse::<u8>()
                                .map_err(|_| bad("id is not an integer"))?,
                        )
                    }
                    "name" => name = Some(value.to_string()),
                    "glyph" => {
                        let mut chars = value.chars();
                        match (chars.next(), chars.next()) {
                            (Some(c), None) => glyph = Some(c),
                            _ => return Err(bad("glyph must be one character")),
                        }
                    }
                    _ => return Err(bad("unknown key")),
                }
            }
            let id = TileId::new(id.ok_or_else(|| bad("missing id"))?)
                .map_err(|_| bad("id out of range"))?;
            let entry = LegendEntry {
                id,
                name: name.ok_or_else(|| bad("missing name"))?,
                glyph: glyph.ok_or_else(|| bad("missing glyph"))?,
            };
            if slots[id.index()].replace(entry).is_some() {
                return Err(bad("duplicate id"));
            }
        }
        let mut entries = Vec::with_capacity(STATE_CHANNELS);
        for (i, slot) in slots.into_iter().enumerate() {
            entries.push(slot.ok_or(GridError::BadLegend {
                line: 0,
                message: format!("id {i} missing"),
            })?);
        }
        let mut by_glyph = HashMap::new();
        for e in &entries {
            if by_glyph.insert(e.glyph, e.id).is_some() {
                return Err(GridError::BadLegend {
                    line: 0,
                    message: format!("glyph {:?} used twice", e.glyph),
                });
            }
        }
        Ok(Legend { entries, by_glyph })
    }

    /// Renders back to the key-value text format.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "id={} name={} glyph={}\n",
                e.id.raw(),
                e.name,
                e.glyph
            ));
        }
        out
    }

    pub fn entries(&self) -> &[LegendEntry] {
        &self.entries
    }

    pub fn glyph(&self, id: TileId) -> char {
        self.entries[id.index()].glyph
    }

    pub fn name(&self, id: TileId) -> &str {
        &self.entries[id.index()].name
    }

    pub fn tile(&self, glyph: char) -> Option<TileId> {
        self.by_glyph.get(&glyph).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<TileId> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.id)
    }
}
