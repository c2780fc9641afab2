//! Grid geometry and exact voxel traversal (Amanatides–Woo DDA).
//!
//! Shared by the lidar simulator, the occupancy-grid inverse sensor model
//! and the ground-truth observation bookkeeping, so all three agree on which
//! cells a beam touches.

use serde::{Deserialize, Serialize};

/// Placement of a dense row-major grid in world coordinates. Cell `(0, 0)`
/// has its lower-left corner at `origin`; index = `iy * width + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, resolution: f64, origin_x: f64, origin_y: f64) -> Self {
        GridGeometry {
            width,
            height,
            resolution,
            origin_x,
            origin_y,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn in_bounds(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height
    }

    /// Continuous grid coordinates (cell units) of a world point.
    pub fn to_grid(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin_x) / self.resolution,
            (y - self.origin_y) / self.resolution,
        )
    }

    /// Cell containing a world point, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (gx, gy) = self.to_grid(x, y);
        let (ix, iy) = (gx.floor() as i64, gy.floor() as i64);
        self.in_bounds(ix, iy).then_some((ix as usize, iy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin_x + (ix as f64 + 0.5) * self.resolution,
            self.origin_y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn world_width(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn world_height(&self) -> f64 {
        self.height as f64 * self.resolution
    }
}

/// One cell visited by a ray, with the ray parameters (meters) at which the
/// ray enters and leaves it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCell {
    pub ix: usize,
    pub iy: usize,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Iterator over the cells pierced by a ray, in order, until the ray leaves
/// the grid or passes `max_t`.
#[derive(Debug, Clone)]
pub struct GridRay {
    geometry: GridGeometry,
    ix: i64,
    iy: i64,
    step_x: i64,
    step_y: i64,
    t_max_x: f64,
    t_max_y: f64,
    t_delta_x: f64,
    t_delta_y: f64,
    t: f64,
    max_t: f64,
}

impl GridRay {
    pub fn new(geometry: GridGeometry, x: f64, y: f64, angle: f64, max_t: f64) -> Self {
        let (gx, gy) = geometry.to_grid(x, y);
        let (dx, dy) = (angle.cos(), angle.sin());
        let res = geometry.resolution;
        let ix = gx.floor() as i64;
        let iy = gy.floor() as i64;
        let axis = |g: f64, i: i64, d: f64| -> (i64, f64, f64) {
            if d > 0.0 {
                (1, ((i + 1) as f64 - g) * res / d, res / d)
            } else if d < 0.0 {
                (-1, (g - i as f64) * res / -d, res / -d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_x, t_max_x, t_delta_x) = axis(gx, ix, dx);
        let (step_y, t_max_y, t_delta_y) = axis(gy, iy, dy);
        GridRay {
            geometry,
            ix,
            iy,
            step_x,
            step_y,
            t_max_x,
            t_max_y,
            t_delta_x,
            t_delta_y,
            t: 0.0,
            max_t,
        }
    }
}

impl Iterator for GridRay {
    type Item = RayCell;

    fn next(&mut self) -> Option<RayCell> {
        if self.t > self.max_t || !self.geometry.in_bounds(self.ix, self.iy) {
            return None;
        }
        let t_exit = self.t_max_x.min(self.t_max_y);
        let cell = RayCell {
            ix: self.ix as usize,
            iy: self.iy as usize,
            t_enter: self.t,
            t_exit,
        };
        if self.t_max_x < self.t_max_y {
            self.ix += self.step_x;
            self.t = self.t_max_x;
            self.t_max_x += self.t_delta_x;
        } else {
            self.iy += self.step_y;
            self.t = self.t_max_y;
            self.t_max_y += self.t_delta_y;
        }
        Some(cell)
    }
}
