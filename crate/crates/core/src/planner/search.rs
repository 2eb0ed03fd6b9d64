use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::grid::{Cell, OccupancyGrid};
use crate::error::{Error, Result};

/// Shortest 4-connected path from `start` to `goal`, both included.
///
/// Returns an empty path when the goal is unreachable and
/// [`Error::BlockedEndpoint`] when either endpoint is not a free cell.
pub fn a_star(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<Vec<Cell>> {
    for c in [start, goal] {
        if grid.is_occupied(c) {
            return Err(Error::BlockedEndpoint(c.x, c.y));
        }
    }
    let w = grid.width();
    let idx = |c: Cell| c.y * w + c.x;
    let n = w * grid.height();
    // Step counts; the metric cost is steps × cell_size and the Manhattan
    // heuristic scales identically, so ordering is unchanged.
    let mut g = vec![usize::MAX; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[idx(start)] = 0;
    open.push(Reverse((start.manhattan(goal), 0usize, start)));
    while let Some(Reverse((_, cost, cell))) = open.pop() {
        if closed[idx(cell)] {
            continue;
        }
        closed[idx(cell)] = true;
        if cell == goal {
            let mut path = vec![goal];
            let mut cur = goal;
            while let Some(p) = parent[idx(cur)] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Ok(path);
        }
        for nb in grid.neighbours(cell) {
            let next = cost + 1;
            if next < g[idx(nb)] {
                g[idx(nb)] = next;
                parent[idx(nb)] = Some(cell);
                open.push(Reverse((next + nb.manhattan(goal), next, nb)));
            }
        }
    }
    Ok(Vec::new())
}

/// Metric length of a cell path, m.
pub fn path_cost(grid: &OccupancyGrid, path: &[Cell]) -> f64 {
    path.len().saturating_sub(1) as f64 * grid.cell_size()
}
