use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::grid::{Cell, OccupancyGrid};
use crate::error::{invalid, Result};

/// Corridor width of generated mazes, m.
pub const MAZE_CELL_SIZE: f64 = 2.0;

/// Grid cell of maze cell `(i, j)`.
pub fn maze_cell(i: usize, j: usize) -> Cell {
    Cell::new(2 * i + 1, 2 * j + 1)
}

/// Random perfect maze over `cells_x × cells_y` maze cells.
///
/// The grid is `(2·cells_x + 1) × (2·cells_y + 1)`; maze cells sit at odd
/// coordinates and the cells between them are walls until opened.
pub fn kruskal_maze(cells_x: usize, cells_y: usize, seed: u64) -> Result<OccupancyGrid> {
    kruskal_maze_with(cells_x, cells_y, seed, MAZE_CELL_SIZE)
}

pub fn kruskal_maze_with(
    cells_x: usize,
    cells_y: usize,
    seed: u64,
    cell_size: f64,
) -> Result<OccupancyGrid> {
    if cells_x < 2 || cells_y < 2 {
        return Err(invalid(
            "maze",
            format!("need at least 2x2 cells, got {cells_x}x{cells_y}"),
        ));
    }
    let mut grid = OccupancyGrid::filled(2 * cells_x + 1, 2 * cells_y + 1, cell_size)?;
    let index = |i: usize, j: usize| j * cells_x + i;
    let mut walls = Vec::with_capacity(2 * cells_x * cells_y);
    for j in 0..cells_y {
        for i in 0..cells_x {
            grid.set(maze_cell(i, j), false);
            if i + 1 < cells_x {
                walls.push(((i, j), (i + 1, j)));
            }
            if j + 1 < cells_y {
                walls.push(((i, j), (i, j + 1)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    walls.shuffle(&mut rng);
    let mut sets = UnionFind::<usize>::new(cells_x * cells_y);
    for ((i0, j0), (i1, j1)) in walls {
        if sets.union(index(i0, j0), index(i1, j1)) {
            grid.set(Cell::new(i0 + i1 + 1, j0 + j1 + 1), false);
        }
    }
    Ok(grid)
}
