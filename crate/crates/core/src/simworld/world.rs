use crate::error::{Error, Result};
use crate::raycast::GridGeometry;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt::Write as _;

/// Disease class of a crop cell; also the classifier's label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CropClass {
    Brown,
    Yellow,
    Healthy,
}

impl CropClass {
    pub const ALL: [CropClass; 3] = [CropClass::Brown, CropClass::Yellow, CropClass::Healthy];

    pub fn index(self) -> usize {
        match self {
            CropClass::Brown => 0,
            CropClass::Yellow => 1,
            CropClass::Healthy => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<CropClass> {
        CropClass::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CropClass::Brown => "brown",
            CropClass::Yellow => "yellow",
            CropClass::Healthy => "healthy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Free,
    Obstacle,
    Crop(CropClass),
}

impl CellKind {
    /// Crop cells are flown over; only obstacles block rays and motion.
    pub fn is_traversable(self) -> bool {
        !matches!(self, CellKind::Obstacle)
    }

    fn glyph(self) -> char {
        match self {
            CellKind::Free => '.',
            CellKind::Obstacle => '#',
            CellKind::Crop(CropClass::Brown) => 'B',
            CellKind::Crop(CropClass::Yellow) => 'Y',
            CellKind::Crop(CropClass::Healthy) => 'H',
        }
    }

    fn from_glyph(c: char) -> Option<CellKind> {
        Some(match c {
            '.' => CellKind::Free,
            '#' => CellKind::Obstacle,
            'B' => CellKind::Crop(CropClass::Brown),
            'Y' => CellKind::Crop(CropClass::Yellow),
            'H' => CellKind::Crop(CropClass::Healthy),
            _ => return None,
        })
    }
}

/// Immutable ground truth: obstacles and crop cells on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    geometry: GridGeometry,
    cells: Vec<CellKind>,
}

impl World {
    pub fn new(geometry: GridGeometry, cells: Vec<CellKind>) -> Result<Self> {
        if geometry.width == 0 || geometry.height == 0 {
            return Err(Error::Config("world must be at least 1x1".into()));
        }
        if !(geometry.resolution > 0.0 && geometry.resolution.is_finite()) {
            return Err(Error::Config("world resolution must be positive".into()));
        }
        if cells.len() != geometry.len() {
            return Err(Error::Config(format!(
                "world has {} cells, expected {}",
                cells.len(),
                geometry.len()
            )));
        }
        Ok(World { geometry, cells })
    }

    /// A world with every cell set to `kind`.
    pub fn filled(width: usize, height: usize, resolution: f64, kind: CellKind) -> Result<Self> {
        World::new(
            GridGeometry::new(width, height, resolution, 0.0, 0.0),
            vec![kind; width * height],
        )
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn resolution(&self) -> f64 {
        self.geometry.resolution
    }

    pub fn cells(&self) -> &[CellKind] {
        &self.cells
    }

    pub fn cell(&self, ix: usize, iy: usize) -> CellKind {
        self.cells[self.geometry.index(ix, iy)]
    }

    pub fn set_cell(&mut self, ix: usize, iy: usize, kind: CellKind) {
        let i = self.geometry.index(ix, iy);
        self.cells[i] = kind;
    }

    pub fn is_obstacle(&self, ix: usize, iy: usize) -> bool {
        matches!(self.cell(ix, iy), CellKind::Obstacle)
    }

    /// Kind of the cell under a world point; `None` outside the grid.
    pub fn kind_at(&self, x: f64, y: f64) -> Option<CellKind> {
        self.geometry.cell_of(x, y).map(|(ix, iy)| self.cell(ix, iy))
    }

    /// `(cell index, class)` of every crop cell, in index order.
    pub fn crop_cells(&self) -> impl Iterator<Item = (usize, CropClass)> + '_ {
        self.cells.iter().enumerate().filter_map(|(i, k)| match k {
            CellKind::Crop(c) => Some((i, *c)),
            _ => None,
        })
    }

    /// Traversable cells 8-connected to the cell under `(x, y)`.
    pub fn reachable_from(&self, x: f64, y: f64) -> Vec<bool> {
        let g = &self.geometry;
        let mut seen = vec![false; g.len()];
        let Some((sx, sy)) = g.cell_of(x, y) else {
            return seen;
        };
        if !self.cell(sx, sy).is_traversable() {
            return seen;
        }
        let mut queue = VecDeque::from([(sx, sy)]);
        seen[g.index(sx, sy)] = true;
        while let Some((cx, cy)) = queue.pop_front() {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if (dx, dy) == (0, 0) || !g.in_bounds(nx, ny) {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    let ni = g.index(nx, ny);
                    if !seen[ni] && self.cell(nx, ny).is_traversable() {
                        seen[ni] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
        seen
    }
}

/// Parses the text world format: a `resolution` header, an optional
/// `origin x y` line, then rows of glyphs with the top row at the largest y.
pub fn load_world(text: &str) -> Result<World> {
    let mut resolution = None;
    let mut origin = (0.0, 0.0);
    let mut rows: Vec<(usize, Vec<CellKind>)> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('%') {
            continue;
        }
        if resolution.is_none() {
            let mut parts = line.split_whitespace();
            if parts.next() != Some("resolution") {
                return Err(Error::parse(line_no, 1, "expected `resolution <float>` header"));
            }
            let value = parts
                .next()
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|r| *r > 0.0 && r.is_finite())
                .ok_or_else(|| Error::parse(line_no, 12, "resolution must be a positive number"))?;
            if parts.next().is_some() {
                return Err(Error::parse(line_no, 1, "trailing tokens after resolution"));
            }
            resolution = Some(value);
            continue;
        }
        if rows.is_empty() && line.starts_with("origin") {
            let values: Vec<f64> = line
                .split_whitespace()
                .skip(1)
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(line_no, 8, "origin needs two numbers"))?;
            if values.len() != 2 || !values.iter().all(|v| v.is_finite()) {
                return Err(Error::parse(line_no, 8, "origin needs two numbers"));
            }
            origin = (values[0], values[1]);
            continue;
        }
        let mut row = Vec::with_capacity(line.len());
        for (col, c) in line.chars().enumerate() {
            let kind = CellKind::from_glyph(c)
                .ok_or_else(|| Error::parse(line_no, col + 1, format!("unknown glyph `{c}`")))?;
            row.push(kind);
        }
        if let Some((_, first)) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    line_no,
                    1,
                    format!(
                        "ragged rows: grid row {} has {} glyphs, expected {}",
                        rows.len() + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push((line_no, row));
    }

    let resolution =
        resolution.ok_or_else(|| Error::parse(1, 1, "missing `resolution <float>` header"))?;
    if rows.is_empty() {
        return Err(Error::parse(text.lines().count().max(1), 1, "world has no grid rows"));
    }
    let width = rows[0].1.len();
    let height = rows.len();
    let mut cells = vec![CellKind::Free; width * height];
    for (r, (_, row)) in rows.into_iter().enumerate() {
        let iy = height - 1 - r;
        cells[iy * width..(iy + 1) * width].copy_from_slice(&row);
    }
    World::new(
        GridGeometry::new(width, height, resolution, origin.0, origin.1),
        cells,
    )
}

/// Inverse of [`load_world`].
pub fn serialize_world(world: &World) -> String {
    let g = world.geometry();
    let mut out = String::with_capacity(g.len() + g.height + 64);
    let _ = writeln!(out, "resolution {}", g.resolution);
    let _ = writeln!(out, "origin {} {}", g.origin_x, g.origin_y);
    for iy in (0..g.height).rev() {
        out.extend((0..g.width).map(|ix| world.cell(ix, iy).glyph()));
        out.push('\n');
    }
    out
}

/// True iff an obstacle cell intersects the closed disc of `radius` around
/// the pose. Space outside the grid is treated as open.
pub fn collision_check(world: &World, x: f64, y: f64, radius: f64) -> bool {
    let g = world.geometry();
    let res = g.resolution;
    let (gx0, gy0) = g.to_grid(x - radius, y - radius);
    let (gx1, gy1) = g.to_grid(x + radius, y + radius);
    let ix0 = (gx0.floor() as i64).max(0);
    let iy0 = (gy0.floor() as i64).max(0);
    let ix1 = (gx1.floor() as i64).min(g.width as i64 - 1);
    let iy1 = (gy1.floor() as i64).min(g.height as i64 - 1);
    let r2 = radius * radius;
    for iy in iy0..=iy1 {
        for ix in ix0..=ix1 {
            if !world.is_obstacle(ix as usize, iy as usize) {
                continue;
            }
            let min_x = g.origin_x + ix as f64 * res;
            let min_y = g.origin_y + iy as f64 * res;
            let cx = x.clamp(min_x, min_x + res);
            let cy = y.clamp(min_y, min_y + res);
            let (dx, dy) = (x - cx, y - cy);
            if dx * dx + dy * dy <= r2 {
                return true;
            }
        }
    }
    false
}
