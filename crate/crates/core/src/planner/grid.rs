use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Integer grid coordinates: column `x`, row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

impl FromStr for Cell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| invalid("cell", format!("expected `x,y`, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| invalid("cell", format!("`{s}`: {e}")))
        };
        Ok(Cell::new(parse(x)?, parse(y)?))
    }
}

/// Boolean occupancy, row-major with row `y` at offset `y * width`.
///
/// Cell `(x, y)` covers the world square
/// `[ox + x·s, ox + (x+1)·s] × [oy + y·s, oy + (y+1)·s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: [f64; 2],
    cells: Vec<bool>,
}

impl OccupancyGrid {
    /// A grid with every cell occupied.
    pub fn filled(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        Self::from_cells(width, height, cell_size, vec![true; width * height])
    }

    /// A free rectangle surrounded by a one-cell wall.
    pub fn open_room(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        let mut g = Self::filled(width, height, cell_size)?;
        for y in 1..height.saturating_sub(1) {
            for x in 1..width.saturating_sub(1) {
                g.set(Cell::new(x, y), false);
            }
        }
        Ok(g)
    }

    pub fn from_cells(width: usize, height: usize, cell_size: f64, cells: Vec<bool>) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(invalid("grid", "width and height must be >= 1"));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(invalid("grid.cell_size", "must be > 0"));
        }
        if cells.len() != width * height {
            return Err(Error::Dimension {
                what: "grid cells",
                expected: width * height,
                actual: cells.len(),
            });
        }
        Ok(Self {
            width,
            height,
            cell_size,
            origin: [0.0, 0.0],
            cells,
        })
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Out-of-grid cells count as occupied.
    pub fn is_occupied(&self, c: Cell) -> bool {
        !self.contains(c) || self.cells[c.y * self.width + c.x]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_occupied(c)
    }

    pub fn set(&mut self, c: Cell, occupied: bool) {
        assert!(self.contains(c), "cell {c} outside {}x{}", self.width, self.height);
        self.cells[c.y * self.width + c.x] = occupied;
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|&c| self.is_free(c))
    }

    /// Free 4-neighbours in the order +x, -x, +y, -y.
    pub fn neighbours(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let candidates = [
            Some(Cell::new(c.x + 1, c.y)),
            c.x.checked_sub(1).map(|x| Cell::new(x, c.y)),
            Some(Cell::new(c.x, c.y + 1)),
            c.y.checked_sub(1).map(|y| Cell::new(c.x, y)),
        ];
        candidates.into_iter().flatten().filter(|&n| self.is_free(n))
    }

    pub fn border_is_closed(&self) -> bool {
        (0..self.width).all(|x| {
            self.is_occupied(Cell::new(x, 0)) && self.is_occupied(Cell::new(x, self.height - 1))
        }) && (0..self.height).all(|y| {
            self.is_occupied(Cell::new(0, y)) && self.is_occupied(Cell::new(self.width - 1, y))
        })
    }

    /// World coordinates of the centre of a cell.
    pub fn cell_center(&self, c: Cell) -> [f64; 2] {
        [
            self.origin[0] + (c.x as f64 + 0.5) * self.cell_size,
            self.origin[1] + (c.y as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Cell containing a world point, if inside the grid.
    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<Cell> {
        let fx = ((x - self.origin[0]) / self.cell_size).floor();
        let fy = ((y - self.origin[1]) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || !fx.is_finite() || !fy.is_finite() {
            return None;
        }
        let c = Cell::new(fx as usize, fy as usize);
        self.contains(c).then_some(c)
    }

    /// Parses the text format: a header `width height cell_size` followed by
    /// `height` rows of `width` characters, `#` occupied and `.` free. The
    /// first row is `y = 0`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::GridFormat("empty input".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::GridFormat(format!(
                "header must be `width height cell_size`, got `{header}`"
            )));
        }
        let bad = |what: &str| Error::GridFormat(format!("bad {what} in header `{header}`"));
        let width: usize = fields[0].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[1].parse().map_err(|_| bad("height"))?;
        let cell_size: f64 = fields[2].parse().map_err(|_| bad("cell_size"))?;
        let mut cells = Vec::with_capacity(width * height);
        for (row, line) in lines.by_ref().take(height).enumerate() {
            let line = line.trim_end();
            if line.chars().count() != width {
                return Err(Error::GridFormat(format!(
                    "row {row} has {} characters, expected {width}",
                    line.chars().count()
                )));
            }
            for ch in line.chars() {
                cells.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(Error::GridFormat(format!(
                            "row {row}: unexpected character `{other}`"
                        )))
                    }
                });
            }
        }
        if cells.len() != width * height {
            return Err(Error::GridFormat(format!(
                "expected {height} rows, got {}",
                cells.len() / width.max(1)
            )));
        }
        if lines.next().is_some() {
            return Err(Error::GridFormat("trailing rows after the grid".into()));
        }
        Self::from_cells(width, height, cell_size, cells)
            .map_err(|e| Error::GridFormat(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for OccupancyGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.width, self.height, self.cell_size)?;
        for row in self.cells.chunks(self.width) {
            let line: String = row.iter().map(|&o| if o { '#' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
