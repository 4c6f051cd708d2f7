use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, MapError, Result};
use crate::geometry::{Cell, Point2};

/// Default grid resolution, mm per cell.
pub const DEFAULT_RESOLUTION: f64 = 100.0;

/// Occupancy grid with one start cell and one or more goal cells.
///
/// Cells outside the grid are treated as free space: the map describes
/// obstacles, not the extent of the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    occupied: Vec<bool>,
    start: Cell,
    goals: Vec<Cell>,
}

impl GridMap {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        occupied: Vec<bool>,
        start: Cell,
        goals: Vec<Cell>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(MapError::Invalid("map must have at least one cell".into()).into());
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(invalid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if occupied.len() != width * height {
            return Err(MapError::Invalid(format!(
                "occupancy has {} cells, expected {}",
                occupied.len(),
                width * height
            ))
            .into());
        }
        if goals.is_empty() {
            return Err(MapError::NoGoal.into());
        }
        let map = Self {
            width,
            height,
            resolution,
            occupied,
            start,
            goals,
        };
        for &cell in std::iter::once(&map.start).chain(&map.goals) {
            if !map.in_bounds(cell) {
                return Err(map.out_of_bounds(cell));
            }
            if map.is_occupied(cell) {
                return Err(MapError::Invalid(format!(
                    "start/goal cell (row {}, col {}) is occupied",
                    cell.row, cell.col
                ))
                .into());
            }
        }
        Ok(map)
    }

    /// An obstacle-free map, handy for tests and open-field runs.
    pub fn open(
        width: usize,
        height: usize,
        resolution: f64,
        start: Cell,
        goal: Cell,
    ) -> Result<Self> {
        Self::new(
            width,
            height,
            resolution,
            vec![false; width * height],
            start,
            vec![goal],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goals(&self) -> &[Cell] {
        &self.goals
    }

    pub fn is_goal(&self, cell: Cell) -> bool {
        self.goals.contains(&cell)
    }

    pub fn with_resolution(mut self, resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(invalid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        self.resolution = resolution;
        Ok(self)
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    /// Occupancy of an in-bounds cell; anything outside the grid is free.
    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && self.occupied[cell.row * self.width + cell.col]
    }

    /// Signed-index variant used by ray traversal.
    pub(crate) fn occupied_at(&self, row: i64, col: i64) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.occupied[row as usize * self.width + col as usize]
    }

    pub fn cell_to_world(&self, cell: Cell) -> Result<Point2> {
        if !self.in_bounds(cell) {
            return Err(self.out_of_bounds(cell));
        }
        Ok(Point2::new(
            (cell.col as f64 + 0.5) * self.resolution,
            (cell.row as f64 + 0.5) * self.resolution,
        ))
    }

    /// Inverse of [`cell_to_world`](Self::cell_to_world); `None` outside the grid.
    pub fn world_to_cell(&self, p: Point2) -> Option<Cell> {
        if !(p.x.is_finite() && p.y.is_finite()) || p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let cell = Cell::new(
            (p.y / self.resolution).floor() as usize,
            (p.x / self.resolution).floor() as usize,
        );
        self.in_bounds(cell).then_some(cell)
    }

    /// World-frame extent of the grid, mm.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    /// True when a disk at `center` intersects any occupied cell.
    pub fn disk_overlaps(&self, center: Point2, radius: f64) -> bool {
        let res = self.resolution;
        let row_lo = ((center.y - radius) / res).floor() as i64;
        let row_hi = ((center.y + radius) / res).floor() as i64;
        let col_lo = ((center.x - radius) / res).floor() as i64;
        let col_hi = ((center.x + radius) / res).floor() as i64;
        let r2 = radius * radius;
        for row in row_lo.max(0)..=row_hi.min(self.height as i64 - 1) {
            for col in col_lo.max(0)..=col_hi.min(self.width as i64 - 1) {
                if !self.occupied_at(row, col) {
                    continue;
                }
                let x0 = col as f64 * res;
                let y0 = row as f64 * res;
                let dx = (x0 - center.x).max(0.0).max(center.x - (x0 + res));
                let dy = (y0 - center.y).max(0.0).max(center.y - (y0 + res));
                if dx * dx + dy * dy < r2 {
                    return true;
                }
            }
        }
        false
    }

    /// Copy of the map with obstacles grown so that a disk of `radius`
    /// centred anywhere on an axis-aligned leg between free cell centres
    /// stays clear. Start and goal cells are never marked.
    pub fn inflated(&self, radius: f64) -> GridMap {
        let reach = radius.hypot(self.resolution / 2.0);
        let mut occupied = self.occupied.clone();
        for row in 0..self.height {
            for col in 0..self.width {
                let cell = Cell::new(row, col);
                if occupied[row * self.width + col] || cell == self.start || self.is_goal(cell) {
                    continue;
                }
                let center = Point2::new(
                    (col as f64 + 0.5) * self.resolution,
                    (row as f64 + 0.5) * self.resolution,
                );
                if self.disk_overlaps(center, reach) {
                    occupied[row * self.width + col] = true;
                }
            }
        }
        GridMap {
            occupied,
            ..self.clone()
        }
    }

    fn out_of_bounds(&self, cell: Cell) -> Error {
        Error::OutOfBounds {
            cell,
            width: self.width,
            height: self.height,
        }
    }
}

/// Centre of `cell` in the map frame.
pub fn cell_to_world(map: &GridMap, cell: Cell) -> Result<Point2> {
    map.cell_to_world(cell)
}
