use log::warn;
use serde::{Deserialize, Serialize};

use super::grid::{Cell, OccupancyGrid};
use crate::error::{invalid, Error, Result};

/// Allowed distance between consecutive waypoints, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spacing {
    pub min: f64,
    pub max: f64,
}

impl Default for Spacing {
    fn default() -> Self {
        Self { min: 1.5, max: 2.5 }
    }
}

impl Spacing {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min > 0.0 && self.min <= self.max) {
            return Err(invalid("spacing", "require 0 < min <= max"));
        }
        Ok(())
    }

    /// Whether some whole number of cells fits in the range.
    pub fn feasible_for(&self, cell_size: f64) -> bool {
        let eps = 1e-9;
        let lo = (self.min / cell_size - eps).ceil().max(1.0);
        let hi = (self.max / cell_size + eps).floor();
        lo <= hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPath {
    /// World positions, m.
    pub waypoints: Vec<[f64; 2]>,
    /// Grid cell of each waypoint.
    pub cells: Vec<Cell>,
    pub spacing: Spacing,
}

impl WaypointPath {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Distances between consecutive waypoints.
    pub fn segment_lengths(&self) -> Vec<f64> {
        self.waypoints
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .collect()
    }
}

/// Every cell whose closed square the segment between the two cell centres
/// touches, including both cells at a corner crossing.
pub fn supercover(a: Cell, b: Cell) -> Vec<Cell> {
    let (x0, y0) = (a.x as i64, a.y as i64);
    let (x1, y1) = (b.x as i64, b.y as i64);
    let (dx, dy) = ((x1 - x0).abs(), (y1 - y0).abs());
    let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
    let (mut x, mut y) = (x0, y0);
    let (mut ix, mut iy) = (0, 0);
    let mut out = vec![a];
    let cell = |x: i64, y: i64| Cell::new(x as usize, y as usize);
    while ix < dx || iy < dy {
        let decision = (1 + 2 * ix) * dy - (1 + 2 * iy) * dx;
        if decision == 0 {
            out.push(cell(x + sx, y));
            out.push(cell(x, y + sy));
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            x += sx;
            ix += 1;
        } else {
            y += sy;
            iy += 1;
        }
        out.push(cell(x, y));
    }
    out
}

pub fn line_of_sight(grid: &OccupancyGrid, a: Cell, b: Cell) -> bool {
    supercover(a, b).into_iter().all(|c| grid.is_free(c))
}

/// Subsamples a cell path into waypoints at cell centres.
///
/// Both path endpoints are kept. Consecutive waypoints are in line of sight
/// and at most `spacing.max` apart; all segments except the last are at
/// least `spacing.min` long whenever such a selection exists. Among valid
/// selections the one with the fewest waypoints is returned.
pub fn extract_waypoints(grid: &OccupancyGrid, path: &[Cell], spacing: Spacing) -> Result<WaypointPath> {
    spacing.validate()?;
    if path.is_empty() {
        return Err(invalid("path", "must not be empty"));
    }
    if !spacing.feasible_for(grid.cell_size()) {
        return Err(Error::InfeasibleSpacing {
            min: spacing.min,
            max: spacing.max,
            cell_size: grid.cell_size(),
        });
    }
    let n = path.len();
    let centers: Vec<[f64; 2]> = path.iter().map(|&c| grid.cell_center(c)).collect();
    let dist = |i: usize, j: usize| (centers[j][0] - centers[i][0]).hypot(centers[j][1] - centers[i][1]);
    let tol = 1e-9;
    let select = |strict: bool| -> Option<Vec<usize>> {
        let mut best = vec![usize::MAX; n];
        let mut next = vec![usize::MAX; n];
        best[n - 1] = 0;
        for i in (0..n - 1).rev() {
            for j in (i + 1..n).rev() {
                if best[j] == usize::MAX {
                    continue;
                }
                let d = dist(i, j);
                if d > spacing.max + tol || (strict && j != n - 1 && d < spacing.min - tol) {
                    continue;
                }
                if best[j] + 1 < best[i] && line_of_sight(grid, path[i], path[j]) {
                    best[i] = best[j] + 1;
                    next[i] = j;
                }
            }
        }
        (best[0] != usize::MAX).then(|| {
            let mut chain = vec![0];
            while *chain.last().unwrap() != n - 1 {
                chain.push(next[*chain.last().unwrap()]);
            }
            chain
        })
    };
    let chain = match select(true) {
        Some(c) => c,
        None => {
            warn!("no waypoint selection meets the minimum spacing; allowing short segments");
            select(false).ok_or_else(|| invalid("path", "consecutive cells are not in line of sight"))?
        }
    };
    Ok(WaypointPath {
        waypoints: chain.iter().map(|&i| centers[i]).collect(),
        cells: chain.iter().map(|&i| path[i]).collect(),
        spacing,
    })
}
