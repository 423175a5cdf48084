//! Occupancy grid and the `gridmap v1` text format.
//!
//! Cell `(0, 0)` is the lower-left cell; row indices grow with world `y`.
//! The text format lists rows top-to-bottom, so the first grid line of a file
//! is internal row `height - 1`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::geometry::Vec2;
use super::WorldError;

/// Integer cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    resolution: f64,
    origin: Vec2,
    width: usize,
    height: usize,
    occupied: Vec<bool>,
}

impl GridMap {
    /// Builds a map from row-major occupancy flags (row 0 at the bottom).
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Vec2,
        occupied: Vec<bool>,
    ) -> Result<Self, WorldError> {
        if width == 0 || height == 0 {
            return Err(WorldError::InvalidMap(
                "width and height must be at least 1".into(),
            ));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(WorldError::InvalidMap("resolution must be positive".into()));
        }
        if !origin.x.is_finite() || !origin.y.is_finite() {
            return Err(WorldError::InvalidMap("origin must be finite".into()));
        }
        if occupied.len() != width * height {
            return Err(WorldError::InvalidMap(format!(
                "expected {} cells, got {}",
                width * height,
                occupied.len()
            )));
        }
        Ok(Self {
            resolution,
            origin,
            width,
            height,
            occupied,
        })
    }

    /// An all-free map.
    pub fn empty(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Vec2,
    ) -> Result<Self, WorldError> {
        Self::new(
            width,
            height,
            resolution,
            origin,
            vec![false; width * height],
        )
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// World-frame extent `(width, height)` in meters.
    pub fn extent(&self) -> Vec2 {
        Vec2::new(
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    pub fn contains_cell(&self, cell: Cell) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    /// Occupancy of a cell. Cells outside the map count as occupied.
    pub fn is_occupied(&self, cell: Cell) -> bool {
        !self.contains_cell(cell) || self.occupied[self.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_occupied(cell)
    }

    pub fn set_occupied(&mut self, cell: Cell, occupied: bool) {
        if self.contains_cell(cell) {
            let i = self.index(cell);
            self.occupied[i] = occupied;
        }
    }

    /// Whether the world point lies in an occupied cell or off the map.
    pub fn is_occupied_at(&self, point: Vec2) -> bool {
        match self.world_to_cell(point) {
            Ok(cell) => self.is_occupied(cell),
            Err(_) => true,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |row| (0..self.width).map(move |col| Cell::new(col, row)))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(move |c| self.is_free(*c))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }

    /// `floor((p - origin) / resolution)` per axis.
    pub fn world_to_cell(&self, point: Vec2) -> Result<Cell, WorldError> {
        let fx = ((point.x - self.origin.x) / self.resolution).floor();
        let fy = ((point.y - self.origin.y) / self.resolution).floor();
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.width as f64 && fy < self.height as f64) {
            return Err(WorldError::OutOfBounds {
                x: point.x,
                y: point.y,
            });
        }
        Ok(Cell::new(fx as usize, fy as usize))
    }

    /// Center of a cell in world coordinates.
    pub fn cell_to_world(&self, cell: Cell) -> Vec2 {
        Vec2::new(
            self.origin.x + (cell.col as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    /// Returns a copy where every free cell whose center lies within `radius`
    /// of an occupied cell's center is marked occupied.
    pub fn inflate(&self, radius: f64) -> GridMap {
        let mut out = self.clone();
        if !(radius > 0.0) {
            return out;
        }
        let reach = (radius / self.resolution).floor() as i64;
        let r2 = radius * radius;
        let res2 = self.resolution * self.resolution;
        let mut offsets = Vec::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                if ((dc * dc + dr * dr) as f64) * res2 <= r2 {
                    offsets.push((dc, dr));
                }
            }
        }
        for cell in self.cells().filter(|c| self.is_occupied(*c)) {
            for &(dc, dr) in &offsets {
                let col = cell.col as i64 + dc;
                let row = cell.row as i64 + dr;
                if col >= 0
                    && row >= 0
                    && (col as usize) < self.width
                    && (row as usize) < self.height
                {
                    out.set_occupied(Cell::new(col as usize, row as usize), true);
                }
            }
        }
        out
    }

    /// Breadth-first search (8-connected) for the free cell closest in hops to `from`.
    pub fn nearest_free_cell(&self, from: Cell) -> Option<Cell> {
        if !self.contains_cell(from) {
            return None;
        }
        if self.is_free(from) {
            return Some(from);
        }
        let mut seen = vec![false; self.width * self.height];
        let mut queue = VecDeque::from([from]);
        seen[self.index(from)] = true;
        while let Some(cell) = queue.pop_front() {
            if self.is_free(cell) {
                return Some(cell);
            }
            for next in self.neighbors8(cell) {
                let i = self.index(next);
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(next);
                }
            }
        }
        None
    }

    /// In-bounds 8-neighbors in a fixed order.
    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        const OFFSETS: [(i64, i64); 8] = [
            (1, 0),
            (0, 1),
            (-1, 0),
            (0, -1),
            (1, 1),
            (-1, 1),
            (-1, -1),
            (1, -1),
        ];
        OFFSETS.iter().filter_map(move |&(dc, dr)| {
            let col = cell.col as i64 + dc;
            let row = cell.row as i64 + dr;
            (col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height)
                .then(|| Cell::new(col as usize, row as usize))
        })
    }

    /// Parses the `gridmap v1` text format.
    pub fn parse(contents: &str) -> Result<GridMap, WorldError> {
        let err = |line: usize, reason: &str| WorldError::MapFormat {
            line,
            reason: reason.to_string(),
        };
        let mut lines = contents.lines().enumerate().map(|(i, l)| (i + 1, l));

        let mut header = Vec::with_capacity(4);
        while header.len() < 4 {
            let Some((no, line)) = lines.next() else {
                return Err(err(
                    contents.lines().count() + 1,
                    "unexpected end of file in header",
                ));
            };
            let t = line.trim();
            if t.is_empty() || t.starts_with("//") {
                continue;
            }
            header.push((no, t));
        }

        let (no, version) = header[0];
        let mut it = version.split_whitespace();
        if it.next() != Some("gridmap") {
            return Err(err(no, "expected `gridmap v1`"));
        }
        match (it.next(), it.next()) {
            (Some("v1"), None) => {}
            (Some(_), None) => return Err(err(no, "unsupported version")),
            _ => return Err(err(no, "expected `gridmap v1`")),
        }

        let (no, line) = header[1];
        let resolution = match keyword_values(line, "resolution", 1) {
            Some(v) => v[0]
                .parse::<f64>()
                .ok()
                .filter(|r| *r > 0.0 && r.is_finite())
                .ok_or_else(|| err(no, "resolution must be a positive number"))?,
            None => return Err(err(no, "expected `resolution <decimal>`")),
        };

        let (no, line) = header[2];
        let origin = match keyword_values(line, "origin", 2) {
            Some(v) => {
                let x = v[0].parse::<f64>().ok().filter(|x| x.is_finite());
                let y = v[1].parse::<f64>().ok().filter(|y| y.is_finite());
                match (x, y) {
                    (Some(x), Some(y)) => Vec2::new(x, y),
                    _ => return Err(err(no, "origin must be two numbers")),
                }
            }
            None => return Err(err(no, "expected `origin <x> <y>`")),
        };

        let (no, line) = header[3];
        let (width, height) = match keyword_values(line, "size", 2) {
            Some(v) => match (v[0].parse::<usize>(), v[1].parse::<usize>()) {
                (Ok(w), Ok(h)) if w > 0 && h > 0 => (w, h),
                _ => return Err(err(no, "size must be two positive integers")),
            },
            None => return Err(err(no, "expected `size <width> <height>`")),
        };

        // Skip comments between header and grid block.
        let mut rows: Vec<(usize, &str)> = Vec::with_capacity(height);
        let mut pending = lines.peekable();
        while let Some(&(_, line)) = pending.peek() {
            let t = line.trim();
            if t.is_empty() || t.starts_with("//") {
                pending.next();
            } else {
                break;
            }
        }
        for _ in 0..height {
            match pending.next() {
                Some((no, line)) => rows.push((no, line.trim_end_matches('\r'))),
                None => {
                    return Err(err(
                        contents.lines().count() + 1,
                        &format!("expected {height} grid rows, found {}", rows.len()),
                    ))
                }
            }
        }
        for (no, line) in pending {
            if !line.trim().is_empty() {
                return Err(err(no, "unexpected content after grid block"));
            }
        }

        let mut occupied = vec![false; width * height];
        for (file_row, &(no, line)) in rows.iter().enumerate() {
            let chars: Vec<char> = line.chars().collect();
            if chars.len() != width {
                return Err(err(
                    no,
                    &format!("row has {} cells, expected {width}", chars.len()),
                ));
            }
            let row = height - 1 - file_row;
            for (col, ch) in chars.into_iter().enumerate() {
                occupied[row * width + col] = match ch {
                    '.' => false,
                    '#' => true,
                    other => return Err(err(no, &format!("illegal cell character {other:?}"))),
                };
            }
        }
        GridMap::new(width, height, resolution, origin, occupied)
    }

    /// Canonical `gridmap v1` text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "gridmap v1");
        let _ = writeln!(out, "resolution {}", self.resolution);
        let _ = writeln!(out, "origin {} {}", self.origin.x, self.origin.y);
        let _ = writeln!(out, "size {} {}", self.width, self.height);
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                out.push(if self.is_occupied(Cell::new(col, row)) {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    /// Rows top-to-bottom as `.`/`#` strings.
    pub fn rows_top_down(&self) -> Vec<String> {
        (0..self.height)
            .rev()
            .map(|row| {
                (0..self.width)
                    .map(|col| {
                        if self.is_occupied(Cell::new(col, row)) {
                            '#'
                        } else {
                            '.'
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn keyword_values<'a>(line: &'a str, keyword: &str, n: usize) -> Option<Vec<&'a str>> {
    let mut it = line.split_whitespace();
    if it.next()? != keyword {
        return None;
    }
    let values: Vec<&str> = it.collect();
    (values.len() == n).then_some(values)
}
