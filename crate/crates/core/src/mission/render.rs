use crate::mapping::{CellClass, OccupancyGrid};

/// RGB canvas over a map, one pixel per cell, top row = largest y.
#[derive(Debug, Clone)]
pub struct Canvas {
    width: usize,
    height: usize,
    origin: (f64, f64),
    resolution: f64,
    pixels: Vec<[u8; 3]>,
}

pub const PATH_COLOR: [u8; 3] = [0, 170, 0];
pub const TRAJECTORY_COLOR: [u8; 3] = [30, 80, 220];
pub const MARKER_COLOR: [u8; 3] = [220, 30, 30];

impl Canvas {
    pub fn from_map(grid: &OccupancyGrid) -> Self {
        let g = grid.geometry();
        let mut pixels = Vec::with_capacity(g.len());
        for iy in (0..g.height).rev() {
            for ix in 0..g.width {
                pixels.push(match grid.class_at(ix, iy) {
                    CellClass::Free => [254, 254, 254],
                    CellClass::Occupied => [0, 0, 0],
                    CellClass::Unknown => [205, 205, 205],
                });
            }
        }
        Canvas {
            width: g.width,
            height: g.height,
            origin: (g.origin_x, g.origin_y),
            resolution: g.resolution,
            pixels,
        }
    }

    fn pixel_of(&self, x: f64, y: f64) -> Option<usize> {
        let cx = ((x - self.origin.0) / self.resolution).floor();
        let cy = ((y - self.origin.1) / self.resolution).floor();
        if cx < 0.0 || cy < 0.0 || cx >= self.width as f64 || cy >= self.height as f64 {
            return None;
        }
        let row = self.height - 1 - cy as usize;
        Some(row * self.width + cx as usize)
    }

    pub fn plot(&mut self, x: f64, y: f64, color: [u8; 3]) {
        if let Some(i) = self.pixel_of(x, y) {
            self.pixels[i] = color;
        }
    }

    /// Draws straight segments between consecutive points, sampled at a
    /// quarter cell.
    pub fn polyline(&mut self, points: &[[f64; 2]], color: [u8; 3]) {
        for pair in points.windows(2) {
            let [a, b] = [pair[0], pair[1]];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let n = ((len / (0.25 * self.resolution)).ceil() as usize).max(1);
            for k in 0..=n {
                let t = k as f64 / n as f64;
                self.plot(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), color);
            }
        }
        if let [p] = points {
            self.plot(p[0], p[1], color);
        }
    }

    /// A plus sign two cells wide.
    pub fn marker(&mut self, x: f64, y: f64, color: [u8; 3]) {
        let r = self.resolution;
        for (dx, dy) in [(0.0, 0.0), (r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r), (2.0 * r, 0.0), (-2.0 * r, 0.0), (0.0, 2.0 * r), (0.0, -2.0 * r)] {
            self.plot(x + dx, y + dy, color);
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }
}

/// Map with the flown trajectory, the planned navigation path and its
/// endpoints.
pub fn render_trajectory(
    grid: &OccupancyGrid,
    trajectory: &[[f64; 2]],
    planned: &[[f64; 2]],
    endpoints: &[[f64; 2]],
) -> Vec<u8> {
    let mut c = Canvas::from_map(grid);
    c.polyline(trajectory, TRAJECTORY_COLOR);
    c.polyline(planned, PATH_COLOR);
    for p in endpoints {
        c.marker(p[0], p[1], MARKER_COLOR);
    }
    c.to_ppm()
}
