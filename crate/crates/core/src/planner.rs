//! ASCII map format, 4-connected A* search, turn-point simplification and the
//! `*` path overlay.
//!
//! Map text uses `#` for walls, `M` for the start, `E` for goals and `.` or
//! space for free cells. Rows are newline separated; `\r` is stripped and a
//! trailing newline is optional. Short rows are padded with free space.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, MapError, Result};
use crate::geometry::{Cell, Point2};
use crate::grid::{GridMap, DEFAULT_RESOLUTION};

const WALL: char = '#';
const START: char = 'M';
const GOAL: char = 'E';
const FREE: char = '.';
const PATH: char = '*';

/// Normalized map text: equal-length rows over `# M E .`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsciiMap {
    rows: Vec<Vec<char>>,
}

impl AsciiMap {
    pub fn parse(text: &str) -> Result<Self, MapError> {
        if text.is_empty() {
            return Err(MapError::Empty);
        }
        let text = text.replace('\r', "");
        let body = text.strip_suffix('\n').unwrap_or(&text);
        if body.is_empty() {
            return Err(MapError::Empty);
        }
        let mut rows: Vec<Vec<char>> = body.split('\n').map(|r| r.chars().collect()).collect();
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);
        if width == 0 {
            return Err(MapError::Empty);
        }

        let mut start: Option<Cell> = None;
        let mut has_goal = false;
        for (r, row) in rows.iter_mut().enumerate() {
            row.resize(width, FREE);
            for (c, ch) in row.iter_mut().enumerate() {
                match *ch {
                    WALL | FREE => {}
                    ' ' => *ch = FREE,
                    START => {
                        let here = Cell::new(r, c);
                        if let Some(first) = start {
                            return Err(MapError::MultipleStarts {
                                first,
                                second: here,
                            });
                        }
                        start = Some(here);
                    }
                    GOAL => has_goal = true,
                    other => {
                        return Err(MapError::UnknownChar {
                            ch: other,
                            row: r,
                            col: c,
                        })
                    }
                }
            }
        }
        if start.is_none() {
            return Err(MapError::NoStart);
        }
        if !has_goal {
            return Err(MapError::NoGoal);
        }
        Ok(Self { rows })
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    pub fn to_grid(&self, resolution: f64) -> Result<GridMap> {
        let (width, height) = (self.width(), self.height());
        let mut occupied = Vec::with_capacity(width * height);
        let mut start = None;
        let mut goals = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (c, &ch) in row.iter().enumerate() {
                occupied.push(ch == WALL);
                match ch {
                    START => start = Some(Cell::new(r, c)),
                    GOAL => goals.push(Cell::new(r, c)),
                    _ => {}
                }
            }
        }
        let start = start.ok_or(MapError::NoStart)?;
        GridMap::new(width, height, resolution, occupied, start, goals)
    }

    /// Text of a grid map, walls as `#` and free space as `.`.
    pub fn from_grid(map: &GridMap) -> Self {
        let rows = (0..map.height())
            .map(|r| {
                (0..map.width())
                    .map(|c| {
                        let cell = Cell::new(r, c);
                        if cell == map.start() {
                            START
                        } else if map.is_goal(cell) {
                            GOAL
                        } else if map.is_occupied(cell) {
                            WALL
                        } else {
                            FREE
                        }
                    })
                    .collect()
            })
            .collect();
        Self { rows }
    }
}

impl fmt::Display for AsciiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            for ch in row {
                write!(f, "{ch}")?;
            }
        }
        Ok(())
    }
}

/// Parses map text at the default 100 mm resolution.
pub fn parse_map(text: &str) -> Result<GridMap> {
    parse_map_with_resolution(text, DEFAULT_RESOLUTION)
}

pub fn parse_map_with_resolution(text: &str, resolution: f64) -> Result<GridMap> {
    AsciiMap::parse(text)?.to_grid(resolution)
}

/// Cells from the start to a goal, each 4-adjacent to the next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPath {
    pub cells: Vec<Cell>,
}

impl GridPath {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Number of unit moves along the path.
    pub fn steps(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }
}

/// World-frame waypoints, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<Point2>,
}

#[derive(Debug, PartialEq, Eq)]
struct Frontier {
    f: usize,
    h: usize,
    seq: u64,
    index: usize,
}

impl Ord for Frontier {
    // BinaryHeap pops the maximum, so order is reversed: lowest f, then
    // lowest h, then earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.f, other.h, other.seq).cmp(&(self.f, self.h, self.seq))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of a search, including every cell expanded in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchTrace {
    pub path: GridPath,
    pub expanded: Vec<Cell>,
}

/// Shortest 4-connected path from the start to the nearest goal.
pub fn astar(map: &GridMap) -> Result<GridPath> {
    astar_traced(map).map(|t| t.path)
}

pub fn astar_traced(map: &GridMap) -> Result<SearchTrace> {
    astar_from(map, map.start())
}

/// A* from an arbitrary free cell to the map's goals.
pub fn astar_from(map: &GridMap, start: Cell) -> Result<SearchTrace> {
    if !map.in_bounds(start) {
        return Err(Error::OutOfBounds {
            cell: start,
            width: map.width(),
            height: map.height(),
        });
    }
    if map.is_occupied(start) {
        return Err(Error::InvalidArgument("search start is occupied".into()));
    }
    let (width, height) = (map.width(), map.height());
    let heuristic = |cell: Cell| {
        map.goals()
            .iter()
            .map(|g| g.manhattan(cell))
            .min()
            .unwrap_or(0)
    };
    let idx = |c: Cell| c.row * width + c.col;

    let mut g = vec![usize::MAX; width * height];
    let mut parent = vec![usize::MAX; width * height];
    let mut closed = vec![false; width * height];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let mut expanded = Vec::new();

    g[idx(start)] = 0;
    let h0 = heuristic(start);
    open.push(Frontier {
        f: h0,
        h: h0,
        seq,
        index: idx(start),
    });

    while let Some(Frontier { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        let cell = Cell::new(index / width, index % width);
        expanded.push(cell);
        if map.is_goal(cell) {
            let mut cells = vec![cell];
            let mut at = index;
            while parent[at] != usize::MAX {
                at = parent[at];
                cells.push(Cell::new(at / width, at % width));
            }
            cells.reverse();
            return Ok(SearchTrace {
                path: GridPath { cells },
                expanded,
            });
        }
        // North, East, South, West
        let neighbours = [
            cell.row.checked_sub(1).map(|r| Cell::new(r, cell.col)),
            (cell.col + 1 < width).then(|| Cell::new(cell.row, cell.col + 1)),
            (cell.row + 1 < height).then(|| Cell::new(cell.row + 1, cell.col)),
            cell.col.checked_sub(1).map(|c| Cell::new(cell.row, c)),
        ];
        for next in neighbours.into_iter().flatten() {
            let ni = idx(next);
            if closed[ni] || map.is_occupied(next) {
                continue;
            }
            let tentative = g[index] + 1;
            if tentative < g[ni] {
                g[ni] = tentative;
                parent[ni] = index;
                let h = heuristic(next);
                seq += 1;
                open.push(Frontier {
                    f: tentative + h,
                    h,
                    seq,
                    index: ni,
                });
            }
        }
    }
    Err(Error::NoPath)
}

fn direction(a: Cell, b: Cell) -> (i64, i64) {
    (b.row as i64 - a.row as i64, b.col as i64 - a.col as i64)
}

/// Keeps the endpoints and every cell where the path changes direction.
pub fn simplify(path: &GridPath) -> GridPath {
    let cells = &path.cells;
    if cells.len() <= 2 {
        return path.clone();
    }
    let mut kept = vec![cells[0]];
    for w in cells.windows(3) {
        if direction(w[0], w[1]) != direction(w[1], w[2]) {
            kept.push(w[1]);
        }
    }
    kept.push(cells[cells.len() - 1]);
    GridPath { cells: kept }
}

/// Turn-point waypoints for a grid path: the simplified cells mapped to their
/// centres, so consecutive waypoints form axis-aligned legs.
pub fn to_waypoints(path: &GridPath, map: &GridMap) -> Result<Path> {
    let nodes = simplify(path)
        .cells
        .iter()
        .map(|&c| map.cell_to_world(c))
        .collect::<Result<_>>()?;
    Ok(Path { nodes })
}

/// Map text with `*` on every path cell that is not the start or a goal.
pub fn render_overlay(map: &AsciiMap, path: &GridPath) -> String {
    let mut rows = map.rows.clone();
    for cell in &path.cells {
        if let Some(ch) = rows.get_mut(cell.row).and_then(|r| r.get_mut(cell.col)) {
            if *ch != START && *ch != GOAL {
                *ch = PATH;
            }
        }
    }
    AsciiMap { rows }.to_string()
}
