use nalgebra::{Matrix3, Vector3};

use super::grid::{Cell, OccupancyGrid};
use crate::contact::{penalty_normal, GroundParams};
use crate::dynamics::ExternalContact;

/// Occupied cells as vertical frictionless penalty blocks of unbounded
/// height. A point inside a block is pushed out through the nearest face
/// that borders free space.
#[derive(Debug, Clone)]
pub struct WallField {
    pub grid: OccupancyGrid,
    pub params: GroundParams,
}

impl WallField {
    pub fn new(grid: OccupancyGrid, params: GroundParams) -> Self {
        Self { grid, params }
    }

    /// Penetration depth and outward unit normal of a planar point, if it
    /// lies inside an occupied cell or outside the grid.
    pub fn penetration(&self, x: f64, y: f64) -> Option<(f64, Vector3<f64>)> {
        let g = &self.grid;
        let s = g.cell_size();
        let [ox, oy] = g.origin();
        let fx = ((x - ox) / s).floor().clamp(0.0, (g.width() - 1) as f64) as usize;
        let fy = ((y - oy) / s).floor().clamp(0.0, (g.height() - 1) as f64) as usize;
        let cell = Cell::new(fx, fy);
        let outside = g.world_to_cell(x, y).is_none();
        if !outside && g.is_free(cell) {
            return None;
        }
        let x0 = ox + fx as f64 * s;
        let y0 = oy + fy as f64 * s;
        // (depth, normal, neighbour across that face)
        let faces = [
            (x - x0, Vector3::new(-1.0, 0.0, 0.0), fx.checked_sub(1).map(|v| Cell::new(v, fy))),
            (x0 + s - x, Vector3::new(1.0, 0.0, 0.0), Some(Cell::new(fx + 1, fy))),
            (y - y0, Vector3::new(0.0, -1.0, 0.0), fy.checked_sub(1).map(|v| Cell::new(fx, v))),
            (y0 + s - y, Vector3::new(0.0, 1.0, 0.0), Some(Cell::new(fx, fy + 1))),
        ];
        let open = faces
            .iter()
            .filter(|f| f.2.is_some_and(|c| g.is_free(c)))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let (depth, normal, _) = open.or_else(|| faces.iter().min_by(|a, b| a.0.total_cmp(&b.0)))?;
        Some((depth.max(0.0), *normal))
    }
}

impl ExternalContact for WallField {
    fn contact(&self, p: &Vector3<f64>, v: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        match self.penetration(p.x, p.y) {
            Some((depth, n)) => {
                let f = penalty_normal(&self.params, depth, v.dot(&n));
                if f > 0.0 {
                    (n * f, n * n.transpose() * self.params.k2)
                } else {
                    (Vector3::zeros(), Matrix3::zeros())
                }
            }
            None => (Vector3::zeros(), Matrix3::zeros()),
        }
    }
}
