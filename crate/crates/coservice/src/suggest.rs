//! Turning the network's action values into concrete additions.
//!
//! For every cell take the channel with the largest q (ties to the lower
//! channel). A cell is suggested when that channel is not EMPTY, its q is at
//! least `threshold` and the cell is currently EMPTY. Suggestions are sorted
//! by descending q, then by row and column, and cut to `top_k`.

use mrin_core::neuralnet::{forward, NetError, NetworkParams};
use mrin_core::tensor::Tensor3;
use mrin_core::tilegrid::{Change, ChangeSet, Legend, TileGrid, TileId, ACTION_CHANNELS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CommandError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuggestConfig {
    pub threshold: f64,
    pub top_k: usize,
}

impl Default for SuggestConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            top_k: 16,
        }
    }
}

impl SuggestConfig {
    pub fn validate(&self) -> Result<(), CommandError> {
        if !self.threshold.is_finite() {
            return Err(CommandError::Config(
                "suggest.threshold must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Suggestion {
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
    pub q_value: f64,
}

/// Decodes an action-value grid against the level it was computed for.
pub fn decode(q: &Tensor3, state: &TileGrid, cfg: &SuggestConfig) -> Vec<Suggestion> {
    assert_eq!(q.channels(), ACTION_CHANNELS);
    assert_eq!((q.width(), q.height()), state.dims());
    let mut out = Vec::new();
    for (x, y, current) in state.iter() {
        if !current.is_empty() {
            continue;
        }
        let cell = q.cell(x, y);
        let mut best = 0;
        for (c, &v) in cell.iter().enumerate() {
            if v > cell[best] {
                best = c;
            }
        }
        let value = cell[best];
        if best == TileId::EMPTY.index() || !value.is_finite() || value < cfg.threshold {
            continue;
        }
        out.push(Suggestion {
            x,
            y,
            tile: TileId::new(best as u8).expect("action channel"),
            q_value: value,
        });
    }
    out.sort_by(|a, b| {
        b.q_value
            .total_cmp(&a.q_value)
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
    });
    out.truncate(cfg.top_k);
    out
}

pub fn suggest(
    params: &NetworkParams,
    state: &TileGrid,
    cfg: &SuggestConfig,
) -> Result<Vec<Suggestion>, NetError> {
    let acts = forward(params, &state.to_state_tensor())?;
    Ok(decode(&acts.output, state, cfg))
}

pub fn to_changeset(suggestions: &[Suggestion]) -> ChangeSet {
    ChangeSet::new(
        suggestions
            .iter()
            .map(|s| Change {
                x: s.x,
                y: s.y,
                before: TileId::EMPTY,
                after: s.tile,
            })
            .collect(),
    )
    .expect("decoded cells are distinct")
}

/// Stable id: first 16 hex digits of SHA-256 over the model fingerprint, the
/// request level and the decoded additions.
pub fn suggestion_id(fingerprint: &str, state: &TileGrid, suggestions: &[Suggestion]) -> String {
    let mut h = Sha256::new();
    h.update(fingerprint.as_bytes());
    h.update([0]);
    for row in state.to_rows(Legend::standard()) {
        h.update(row.as_bytes());
        h.update(b"\n");
    }
    for s in suggestions {
        h.update((s.x as u64).to_le_bytes());
        h.update((s.y as u64).to_le_bytes());
        h.update([s.tile.raw()]);
        h.update(s.q_value.to_le_bytes());
    }
    hex::encode(h.finalize())[..16].to_string()
}
