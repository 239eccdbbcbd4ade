//! 3×3 grid over a pixel box. Cells are numbered 1 (top-left) to 9
//! (bottom-right), row-major.

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::perception::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct GridCell(u8);

impl GridCell {
    pub const CENTER: GridCell = GridCell(5);

    pub fn new(index: u8) -> Option<Self> {
        (1..=9).contains(&index).then_some(GridCell(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = GridCell> {
        (1..=9).map(GridCell)
    }

    fn col_row(self) -> (u8, u8) {
        ((self.0 - 1) % 3, (self.0 - 1) / 3)
    }
}

impl TryFrom<u8> for GridCell {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        GridCell::new(v).ok_or_else(|| format!("grid cell {v} outside 1..=9"))
    }
}

impl From<GridCell> for u8 {
    fn from(c: GridCell) -> u8 {
        c.0
    }
}

/// Center of `cell` inside `bbox`, in pixel coordinates.
pub fn cell_center(bbox: &BBox, cell: GridCell) -> Result<(f64, f64), PlanError> {
    if bbox.x1 >= bbox.x2 || bbox.y1 >= bbox.y2 {
        return Err(PlanError::DegenerateBox(bbox.as_array()));
    }
    let w = (bbox.x2 - bbox.x1) as f64 / 3.0;
    let h = (bbox.y2 - bbox.y1) as f64 / 3.0;
    let (col, row) = cell.col_row();
    Ok((bbox.x1 as f64 + (col as f64 + 0.5) * w, bbox.y1 as f64 + (row as f64 + 0.5) * h))
}

/// Cell containing pixel point `(u, v)`, with `x1 ≤ u ≤ x2`, `y1 ≤ v ≤ y2`.
/// Column and row are floored; the right and bottom edges clamp into the
/// last column and row.
pub fn cell_of(bbox: &BBox, (u, v): (f64, f64)) -> Result<GridCell, PlanError> {
    if bbox.x1 >= bbox.x2 || bbox.y1 >= bbox.y2 {
        return Err(PlanError::DegenerateBox(bbox.as_array()));
    }
    let (x1, y1, x2, y2) = (bbox.x1 as f64, bbox.y1 as f64, bbox.x2 as f64, bbox.y2 as f64);
    if !(x1..=x2).contains(&u) || !(y1..=y2).contains(&v) {
        return Err(PlanError::OutsideBox { point: [u, v], bbox: bbox.as_array() });
    }
    let col = ((3.0 * (u - x1) / (x2 - x1)).floor() as u8).min(2);
    let row = ((3.0 * (v - y1) / (y2 - y1)).floor() as u8).min(2);
    Ok(GridCell(row * 3 + col + 1))
}
