use super::{GridError, TileGrid, TileId, MIN_SIDE};

/// A 3×3 window of tiles in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Patch3(pub [TileId; 9]);

impl Patch3 {
    pub fn at(grid: &TileGrid, x: usize, y: usize) -> Patch3 {
        let mut cells = [TileId::EMPTY; 9];
        for dy in 0..3 {
            for dx in 0..3 {
                cells[dy * 3 + dx] = grid.get(x + dx, y + dy);
            }
        }
        Patch3(cells)
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|t| t.is_empty())
    }
}

/// All non-empty 3×3 windows at stride 1, in row-major window order.
///
/// Duplicates are kept; the result is a multiset.
pub fn extract_patches(grid: &TileGrid) -> Result<Vec<Patch3>, GridError> {
    let (width, height) = grid.dims();
    if width < MIN_SIDE || height < MIN_SIDE {
        return Err(GridError::GridTooSmall { width, height });
    }
    let mut out = Vec::new();
    for y in 0..=height - 3 {
        for x in 0..=width - 3 {
            let p = Patch3::at(grid, x, y);
            if !p.is_empty() {
                out.push(p);
            }
        }
    }
    Ok(out)
}
