//! Global planning: occupancy grids, random perfect mazes, A* search and
//! waypoint extraction, plus the wall model used in simulation.

mod grid;
mod maze;
mod search;
mod walls;
mod waypoints;

pub use grid::{Cell, OccupancyGrid};
pub use maze::{kruskal_maze, kruskal_maze_with, maze_cell, MAZE_CELL_SIZE};
pub use search::{a_star, path_cost};
pub use walls::WallField;
pub use waypoints::{extract_waypoints, line_of_sight, supercover, Spacing, WaypointPath};

use crate::error::{Error, Result};

/// A* followed by waypoint extraction. An unreachable goal is an error.
pub fn plan(grid: &OccupancyGrid, start: Cell, goal: Cell, spacing: Spacing) -> Result<WaypointPath> {
    let path = a_star(grid, start, goal)?;
    if path.is_empty() {
        return Err(Error::Unreachable);
    }
    extract_waypoints(grid, &path, spacing)
}
