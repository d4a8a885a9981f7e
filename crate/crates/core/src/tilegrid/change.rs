use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{GridError, TileGrid, TileId};

/// One cell edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Change {
    pub x: usize,
    pub y: usize,
    pub before: TileId,
    pub after: TileId,
}

impl Change {
    pub fn is_addition(&self) -> bool {
        self.before.is_empty() && !self.after.is_empty()
    }

    pub fn is_removal(&self) -> bool {
        !self.before.is_empty() && self.after.is_empty()
    }
}

/// A set of cell edits with unique positions and `before != after`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Change>", into = "Vec<Change>")]
pub struct ChangeSet(Vec<Change>);

impl ChangeSet {
    pub fn new(changes: Vec<Change>) -> Result<Self, GridError> {
        let mut seen = HashSet::with_capacity(changes.len());
        for c in &changes {
            if c.before == c.after {
                return Err(GridError::InvalidChangeSet(format!(
                    "no-op change at ({},{})",
                    c.x, c.y
                )));
            }
            if !seen.insert((c.x, c.y)) {
                return Err(GridError::InvalidChangeSet(format!(
                    "duplicate position ({},{})",
                    c.x, c.y
                )));
            }
        }
        Ok(ChangeSet(changes))
    }

    pub fn empty() -> Self {
        ChangeSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Change> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Change] {
        &self.0
    }

    /// Entries that place a tile on an EMPTY cell.
    pub fn additions(&self) -> impl Iterator<Item = &Change> {
        self.0.iter().filter(|c| c.is_addition())
    }

    pub fn addition_count(&self) -> usize {
        self.additions().count()
    }

    pub fn find(&self, x: usize, y: usize) -> Option<&Change> {
        self.0.iter().find(|c| c.x == x && c.y == y)
    }
}

impl TryFrom<Vec<Change>> for ChangeSet {
    type Error = GridError;

    fn try_from(v: Vec<Change>) -> Result<Self, Self::Error> {
        ChangeSet::new(v)
    }
}

impl From<ChangeSet> for Vec<Change> {
    fn from(cs: ChangeSet) -> Self {
        cs.0
    }
}

impl<'a> IntoIterator for &'a ChangeSet {
    type Item = &'a Change;
    type IntoIter = std::slice::Iter<'a, Change>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Cell-by-cell difference, row-major.
pub fn diff(a: &TileGrid, b: &TileGrid) -> Result<ChangeSet, GridError> {
    if a.dims() != b.dims() {
        return Err(GridError::DimensionMismatch(a.dims(), b.dims()));
    }
    let changes = a
        .iter()
        .zip(b.cells())
        .filter(|((_, _, before), after)| before != *after)
        .map(|((x, y, before), &after)| Change {
            x,
            y,
            before,
            after,
        })
        .collect();
    Ok(ChangeSet(changes))
}

/// Applies `cs` to a copy of `grid`. Every entry's `before` must match the grid.
pub fn apply(grid: &TileGrid, cs: &ChangeSet) -> Result<TileGrid, GridError> {
    let mut out = grid.clone();
    for c in cs {
        match grid.try_get(c.x, c.y) {
            None => return Err(GridError::OutOfRange { x: c.x, y: c.y }),
            Some(t) if t != c.before => return Err(GridError::StaleChange { x: c.x, y: c.y }),
            Some(_) => out.set(c.x, c.y, c.after)?,
        }
    }
    Ok(out)
}

/// Renders a change set on an all-EMPTY canvas: listed cells carry `after`.
pub fn changeset_to_grid(
    cs: &ChangeSet,
    width: usize,
    height: usize,
) -> Result<TileGrid, GridError> {
    let mut g = TileGrid::new(width, height)?;
    for c in cs {
        g.set(c.x, c.y, c.after)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_grids_have_empty_diff() {
        let g = TileGrid::new(4, 3).unwrap();
        assert!(diff(&g, &g).unwrap().is_empty());
    }

    #[test]
    fn single_cell_diff() {
        let a = TileGrid::new(4, 4).unwrap();
        let mut b = a.clone();
        b.set(1, 2, TileId::GROUND).unwrap();
        let cs = diff(&a, &b).unwrap();
        assert_eq!(
            cs.as_slice(),
            &[Change {
                x: 1,
                y: 2,
                before: TileId::EMPTY,
                after: TileId::GROUND
            }]
        );
    }

    #[test]
    fn dimension_mismatch() {
        let a = TileGrid::new(4, 4).unwrap();
        let b = TileGrid::new(4, 5).unwrap();
        assert!(matches!(
            diff(&a, &b),
            Err(GridError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn stale_change_rejected() {
        let g = TileGrid::new(3, 3).unwrap();
        let cs = ChangeSet::new(vec![Change {
            x: 0,
            y: 0,
            before: TileId::GROUND,
            after: TileId::EMPTY,
        }])
        .unwrap();
        assert_eq!(apply(&g, &cs), Err(GridError::StaleChange { x: 0, y: 0 }));
    }

    #[test]
    fn changeset_rejects_noop_and_duplicates() {
        let noop = Change {
            x: 0,
            y: 0,
            before: TileId::GOOMBA,
            after: TileId::GOOMBA,
        };
        assert!(ChangeSet::new(vec![noop]).is_err());
        let add = Change {
            x: 0,
            y: 0,
            before: TileId::EMPTY,
            after: TileId::GOOMBA,
        };
        assert!(ChangeSet::new(vec![add, add]).is_err());
    }

    #[test]
    fn empty_changeset_renders_empty_grid() {
        let g = changeset_to_grid(&ChangeSet::empty(), 5, 4).unwrap();
        assert_eq!(g, TileGrid::new(5, 4).unwrap());
    }

    #[test]
    fn one_goomba_on_full_size_grid() {
        let cs = ChangeSet::new(vec![Change {
            x: 5,
            y: 3,
            before: TileId::EMPTY,
            after: TileId::GOOMBA,
        }])
        .unwrap();
        let g = changeset_to_grid(&cs, 40, 15).unwrap();
        assert_eq!(g.non_empty_count(), 1);
        assert_eq!(g.get(5, 3), TileId::GOOMBA);
    }

    #[test]
    fn changeset_out_of_range() {
        let cs = ChangeSet::new(vec![Change {
            x: 9,
            y: 0,
            before: TileId::EMPTY,
            after: TileId::GOOMBA,
        }])
        .unwrap();
        assert_eq!(
            changeset_to_grid(&cs, 4, 4),
            Err(GridError::OutOfRange { x: 9, y: 0 })
        );
    }
}
