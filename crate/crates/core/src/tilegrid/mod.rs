//! Tile vocabulary and the level/action grid representation.
//!
//! Grids are addressed with `x` as the column from the left and `y` as the row
//! from the top. The same [`TileGrid`] type carries a full level state and an
//! action (a grid of additions on an otherwise empty canvas).

mod change;
mod legend;
mod patch;

pub use change::{apply, changeset_to_grid, diff, Change, ChangeSet};
pub use legend::{Legend, LegendEntry, TileId, ACTION_CHANNELS, STATE_CHANNELS};
pub use patch::{extract_patches, Patch3};

use std::fmt;

use thiserror::Error;

use crate::tensor::Tensor3;

/// Smallest legal grid side; one 3×3 patch must fit.
pub const MIN_SIDE: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("tile id {0} is outside 0..34")]
    InvalidTile(u8),
    #[error("unknown glyph {glyph:?} at line {line}, column {col}")]
    UnknownGlyph {
        glyph: char,
        line: usize,
        col: usize,
    },
    #[error("line {0} has a different length than the first line")]
    RaggedLines(usize),
    #[error("grid is {width}x{height}; both sides must be at least 3")]
    GridTooSmall { width: usize, height: usize },
    #[error("grid dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("change at ({x},{y}) expects a different tile than the grid holds")]
    StaleChange { x: usize, y: usize },
    #[error("position ({x},{y}) is outside the grid")]
    OutOfRange { x: usize, y: usize },
    #[error("invalid change set: {0}")]
    InvalidChangeSet(String),
    #[error("legend line {line}: {message}")]
    BadLegend { line: usize, message: String },
    #[error("cell count {got} does not match {width}x{height}")]
    CellCount {
        width: usize,
        height: usize,
        got: usize,
    },
}

/// Width × height grid of tile IDs in row-major order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TileGrid {
    width: usize,
    height: usize,
    cells: Vec<TileId>,
}

impl TileGrid {
    /// An all-EMPTY grid.
    pub fn new(width: usize, height: usize) -> Result<Self, GridError> {
        Self::filled(width, height, TileId::EMPTY)
    }

    pub fn filled(width: usize, height: usize, tile: TileId) -> Result<Self, GridError> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(GridError::GridTooSmall { width, height });
        }
        Ok(Self {
            width,
            height,
            cells: vec![tile; width * height],
        })
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<TileId>) -> Result<Self, GridError> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(GridError::GridTooSmall { width, height });
        }
        if cells.len() != width * height {
            return Err(GridError::CellCount {
                width,
                height,
                got: cells.len(),
            });
        }
        Ok(Self {
            width,
            height,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn cells(&self) -> &[TileId] {
        &self.cells
    }

    pub fn in_bounds(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> TileId {
        self.cells[y * self.width + x]
    }

    pub fn try_get(&self, x: usize, y: usize) -> Option<TileId> {
        self.in_bounds(x, y).then(|| self.get(x, y))
    }

    pub fn set(&mut self, x: usize, y: usize, tile: TileId) -> Result<(), GridError> {
        if !self.in_bounds(x, y) {
            return Err(GridError::OutOfRange { x, y });
        }
        self.cells[y * self.width + x] = tile;
        Ok(())
    }

    /// Whether the grid contains neither PLAYER nor FLAG, i.e. is usable as an action grid.
    pub fn is_action_grid(&self) -> bool {
        self.cells.iter().all(|t| t.is_placeable())
    }

    pub fn non_empty_count(&self) -> usize {
        self.cells.iter().filter(|t| !t.is_empty()).count()
    }

    /// `(x, y, tile)` for every cell in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, TileId)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, &t)| (i % self.width, i / self.width, t))
    }

    /// One-hot encoding with shape `(width, height, 34)`.
    pub fn to_state_tensor(&self) -> Tensor3 {
        let mut t = Tensor3::zeros(self.width, self.height, STATE_CHANNELS);
        for (x, y, tile) in self.iter() {
            t.set(x, y, tile.index(), 1.0);
        }
        t
    }

    /// Glyph rows using the given legend.
    pub fn to_rows(&self, legend: &Legend) -> Vec<String> {
        self.cells
            .chunks(self.width)
            .map(|row| row.iter().map(|&t| legend.glyph(t)).collect())
            .collect()
    }

    /// Builds a grid from glyph rows (the JSON wire form of a grid).
    pub fn from_rows<S: AsRef<str>>(rows: &[S], legend: &Legend) -> Result<Self, GridError> {
        let mut cells = Vec::new();
        let mut width = None;
        for (line_idx, row) in rows.iter().enumerate() {
            let mut len = 0;
            for (col, ch) in row.as_ref().chars().enumerate() {
                let tile = legend.tile(ch).ok_or(GridError::UnknownGlyph {
                    glyph: ch,
                    line: line_idx + 1,
                    col: col + 1,
                })?;
                cells.push(tile);
                len += 1;
            }
            match width {
                None => width = Some(len),
                Some(w) if w != len => return Err(GridError::RaggedLines(line_idx + 1)),
                _ => {}
            }
        }
        Self::from_cells(width.unwrap_or(0), rows.len(), cells)
    }
}

impl fmt::Debug for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "TileGrid {}x{}", self.width, self.height)?;
        for row in self.to_rows(Legend::standard()) {
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

/// Parses a text level: one glyph per tile, newline-separated rows.
///
/// A single trailing newline is accepted. Line and column numbers in errors are 1-based.
pub fn parse_text_level(text: &str, legend: &Legend) -> Result<TileGrid, GridError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = body
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    TileGrid::from_rows(&lines, legend)
}

/// Inverse of [`parse_text_level`]; rows joined by `\n` with no trailing newline.
pub fn render_text_level(grid: &TileGrid, legend: &Legend) -> String {
    grid.to_rows(legend).join("\n")
}
