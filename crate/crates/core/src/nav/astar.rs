//! A* over the 8-connected free cells of an (inflated) occupancy grid.
//!
//! Path costs are kept as exact `(axial, diagonal)` step counts so that
//! equal-cost paths compare equal regardless of summation order.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::world::{Cell, GridMap, Vec2};

use super::NavError;

/// A path length on the unit grid, `axial + diagonal·√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct OctileCost {
    pub axial: u32,
    pub diagonal: u32,
}

impl OctileCost {
    pub const ZERO: OctileCost = OctileCost {
        axial: 0,
        diagonal: 0,
    };

    /// Octile distance between two cells.
    pub fn between(a: Cell, b: Cell) -> Self {
        let dx = a.col.abs_diff(b.col) as u32;
        let dy = a.row.abs_diff(b.row) as u32;
        OctileCost {
            axial: dx.max(dy) - dx.min(dy),
            diagonal: dx.min(dy),
        }
    }

    /// Cost in cells, as a float.
    pub fn value(self) -> f64 {
        self.axial as f64 + self.diagonal as f64 * SQRT_2
    }

    fn plus(self, other: OctileCost) -> OctileCost {
        OctileCost {
            axial: self.axial + other.axial,
            diagonal: self.diagonal + other.diagonal,
        }
    }
}

impl Ord for OctileCost {
    /// Exact comparison of `a1 + b1·√2` against `a2 + b2·√2`.
    fn cmp(&self, other: &Self) -> Ordering {
        // Compare x = a1 - a2 against y·√2 with y = b2 - b1.
        let x = self.axial as i64 - other.axial as i64;
        let y = other.diagonal as i64 - self.diagonal as i64;
        if x == 0 && y == 0 {
            return Ordering::Equal;
        }
        let (x2, y2) = ((x * x) as i128, (2 * y * y) as i128);
        match (x.signum(), y.signum()) {
            (xs, ys) if xs <= 0 && ys >= 0 => Ordering::Less,
            (xs, ys) if xs >= 0 && ys <= 0 => Ordering::Greater,
            // Both positive: x < y√2 ⇔ x² < 2y².
            (1, 1) => x2.cmp(&y2),
            // Both negative: x < y√2 ⇔ x² > 2y².
            _ => y2.cmp(&x2),
        }
    }
}

impl PartialOrd for OctileCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Vec2>,
    /// Length in meters under the octile metric.
    pub total_cost: f64,
    pub steps: OctileCost,
}

impl Path {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

const AXIAL: OctileCost = OctileCost {
    axial: 1,
    diagonal: 0,
};
const DIAGONAL: OctileCost = OctileCost {
    axial: 0,
    diagonal: 1,
};

/// Step cost from `from` to the 8-neighbor `to`, or `None` when the move is
/// blocked (target occupied, or a diagonal squeezing between two occupied
/// axial cells).
pub(crate) fn step_cost(map: &GridMap, from: Cell, to: Cell) -> Option<OctileCost> {
    if map.is_occupied(to) {
        return None;
    }
    if from.col != to.col && from.row != to.row {
        let side_a = Cell::new(to.col, from.row);
        let side_b = Cell::new(from.col, to.row);
        if map.is_occupied(side_a) && map.is_occupied(side_b) {
            return None;
        }
        Some(DIAGONAL)
    } else {
        Some(AXIAL)
    }
}

#[derive(PartialEq, Eq)]
struct Open {
    f: OctileCost,
    h: OctileCost,
    seq: u64,
    cell: Cell,
}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .cmp(&other.f)
            .then(self.h.cmp(&other.h))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimal-cost path between the cells containing `start` and `goal`.
pub fn plan_path(map: &GridMap, start: Vec2, goal: Vec2) -> Result<Path, NavError> {
    let start_cell = map
        .world_to_cell(start)
        .ok()
        .filter(|c| map.is_free(*c))
        .ok_or(NavError::StartOccupied)?;
    let goal_cell = map
        .world_to_cell(goal)
        .ok()
        .filter(|c| map.is_free(*c))
        .ok_or(NavError::GoalOccupied)?;
    plan_cells(map, start_cell, goal_cell)
}

pub(crate) fn plan_cells(map: &GridMap, start: Cell, goal: Cell) -> Result<Path, NavError> {
    let width = map.width();
    let index = |c: Cell| c.row * width + c.col;
    let n = width * map.height();
    let mut g: Vec<Option<OctileCost>> = vec![None; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;

    g[index(start)] = Some(OctileCost::ZERO);
    let h = OctileCost::between(start, goal);
    open.push(Reverse(Open {
        f: h,
        h,
        seq,
        cell: start,
    }));

    while let Some(Reverse(Open { cell, .. })) = open.pop() {
        let ci = index(cell);
        if closed[ci] {
            continue;
        }
        closed[ci] = true;
        if cell == goal {
            return Ok(reconstruct(
                map,
                &parent,
                start,
                goal,
                g[ci].unwrap_or_default(),
            ));
        }
        let g_here = g[ci].expect("expanded cells have a cost");
        for next in map.neighbors8(cell) {
            let ni = index(next);
            if closed[ni] {
                continue;
            }
            let Some(step) = step_cost(map, cell, next) else {
                continue;
            };
            let tentative = g_here.plus(step);
            if g[ni].is_none_or(|old| tentative < old) {
                g[ni] = Some(tentative);
                parent[ni] = Some(cell);
                let h = OctileCost::between(next, goal);
                seq += 1;
                open.push(Reverse(Open {
                    f: tentative.plus(h),
                    h,
                    seq,
                    cell: next,
                }));
            }
        }
    }
    Err(NavError::NoPath)
}

fn reconstruct(
    map: &GridMap,
    parent: &[Option<Cell>],
    start: Cell,
    goal: Cell,
    steps: OctileCost,
) -> Path {
    let width = map.width();
    let mut cells = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = parent[cur.row * width + cur.col].expect("path chain reaches start");
        cells.push(cur);
    }
    cells.reverse();
    Path {
        waypoints: cells.into_iter().map(|c| map.cell_to_world(c)).collect(),
        total_cost: steps.value() * map.resolution(),
        steps,
    }
}
