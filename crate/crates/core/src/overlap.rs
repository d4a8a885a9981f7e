//! Local overlap ratio between a level and an action.
//!
//! Both grids are reduced to their multisets of non-empty 3×3 patches. Patches
//! are matched by exact tile equality regardless of position, and each patch
//! can be consumed by at most one match.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tilegrid::{changeset_to_grid, extract_patches, ChangeSet, GridError, Patch3, TileGrid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OverlapError {
    #[error("action has no non-empty 3x3 patch")]
    EmptyAction,
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    pub matched: usize,
    pub action_patches: usize,
    pub level_patches: usize,
    pub ratio: f64,
}

pub fn local_overlap_ratio(
    level: &TileGrid,
    action: &TileGrid,
) -> Result<OverlapResult, OverlapError> {
    let level_patches = extract_patches(level)?;
    let action_patches = extract_patches(action)?;
    if action_patches.is_empty() {
        return Err(OverlapError::EmptyAction);
    }

    let mut available: HashMap<Patch3, usize> = HashMap::with_capacity(level_patches.len());
    for p in &level_patches {
        *available.entry(*p).or_default() += 1;
    }
    let mut matched = 0;
    for p in &action_patches {
        if let Some(n) = available.get_mut(p) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }

    Ok(OverlapResult {
        matched,
        action_patches: action_patches.len(),
        level_patches: level_patches.len(),
        ratio: matched as f64 / action_patches.len() as f64,
    })
}

/// Compares a level against a change set rendered on an empty canvas of the level's size.
pub fn overlap_with_changes(
    level: &TileGrid,
    changes: &ChangeSet,
) -> Result<OverlapResult, OverlapError> {
    let action = changeset_to_grid(changes, level.width(), level.height())?;
    local_overlap_ratio(level, &action)
}
