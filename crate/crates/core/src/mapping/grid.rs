use crate::geometry::Pose;
use crate::raycast::{GridGeometry, GridRay, RayCell};
use crate::simworld::LaserScan;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Squared-distance sentinel for cells farther than the field radius.
pub(crate) const FAR: u16 = u16::MAX;

/// Inverse sensor model and likelihood-field constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub l_occ: f64,
    pub l_free: f64,
    pub l_clamp: f64,
    pub p_occ_thresh: f64,
    pub p_free_thresh: f64,
    pub sigma_hit: f64,
    pub z_floor: f64,
    /// Every `beam_stride`-th beam is scored.
    pub beam_stride: usize,
    /// Half-width, in cells, of the window around a measured range that is
    /// searched for the obstacle face the beam ended on.
    pub hit_extension: f64,
    /// Distances beyond this radius (meters) count as infinitely far.
    pub field_radius: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            l_occ: (0.7f64 / 0.3).ln(),
            l_free: (0.4f64 / 0.6).ln(),
            l_clamp: 5.0,
            p_occ_thresh: 0.65,
            p_free_thresh: 0.35,
            sigma_hit: 0.2,
            z_floor: 1e-3,
            beam_stride: 4,
            hit_extension: 0.5,
            field_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Free,
    Occupied,
    Unknown,
}

/// Log-odds occupancy grid with an incrementally maintained, capped
/// Euclidean distance field to the occupied cells.
///
/// Storage is reference counted and copied on write, so cloning a grid
/// (particle resampling) is cheap until one copy is modified.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    geometry: GridGeometry,
    logodds: Arc<Vec<f64>>,
    l_clamp: f64,
    occ_logodds: f64,
    free_logodds: f64,
    field_cells: u16,
    /// Squared distance (cell units) to the nearest occupied cell, or FAR.
    dist2: Arc<Vec<u16>>,
    occupied: usize,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry, model: &SensorModel) -> Self {
        let field_cells = (model.field_radius / geometry.resolution).ceil().clamp(1.0, 200.0) as u16;
        OccupancyGrid {
            logodds: Arc::new(vec![0.0; geometry.len()]),
            dist2: Arc::new(vec![FAR; geometry.len()]),
            geometry,
            l_clamp: model.l_clamp,
            occ_logodds: logit(model.p_occ_thresh),
            free_logodds: logit(model.p_free_thresh),
            field_cells,
            occupied: 0,
        }
    }

    /// Builds a grid from raw log-odds values (clamped on entry).
    pub fn from_logodds(geometry: GridGeometry, model: &SensorModel, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), geometry.len(), "log-odds length mismatch");
        let mut grid = OccupancyGrid::new(geometry, model);
        let clamp = grid.l_clamp;
        grid.logodds = Arc::new(values.into_iter().map(|v| v.clamp(-clamp, clamp)).collect());
        grid.rebuild_field();
        grid
    }

    /// A grid whose cells are pinned to `classes` (saturated log-odds).
    pub fn from_classes(geometry: GridGeometry, model: &SensorModel, classes: &[CellClass]) -> Self {
        let values = classes
            .iter()
            .map(|c| match c {
                CellClass::Occupied => model.l_clamp,
                CellClass::Free => -model.l_clamp,
                CellClass::Unknown => 0.0,
            })
            .collect();
        OccupancyGrid::from_logodds(geometry, model, values)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn logodds(&self) -> &[f64] {
        &self.logodds
    }

    pub fn logodds_at(&self, ix: usize, iy: usize) -> f64 {
        self.logodds[self.geometry.index(ix, iy)]
    }

    pub fn probability(&self, index: usize) -> f64 {
        1.0 - 1.0 / (1.0 + self.logodds[index].exp())
    }

    pub fn class_of(&self, index: usize) -> CellClass {
        self.classify(self.logodds[index])
    }

    pub fn class_at(&self, ix: usize, iy: usize) -> CellClass {
        self.class_of(self.geometry.index(ix, iy))
    }

    fn classify(&self, l: f64) -> CellClass {
        if l > self.occ_logodds {
            CellClass::Occupied
        } else if l < self.free_logodds {
            CellClass::Free
        } else {
            CellClass::Unknown
        }
    }

    pub fn classes(&self) -> Vec<CellClass> {
        self.logodds.iter().map(|&l| self.classify(l)).collect()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn count_class(&self, class: CellClass) -> usize {
        self.logodds.iter().filter(|&&l| self.classify(l) == class).count()
    }

    /// Distance in meters from the center of a cell to the nearest occupied
    /// cell center, or infinity beyond the field radius.
    pub fn obstacle_distance(&self, ix: usize, iy: usize) -> f64 {
        match self.dist2[self.geometry.index(ix, iy)] {
            FAR => f64::INFINITY,
            d2 => (d2 as f64).sqrt() * self.geometry.resolution,
        }
    }

    pub(crate) fn dist2_raw(&self) -> &[u16] {
        &self.dist2
    }

    pub(crate) fn field_cells(&self) -> u16 {
        self.field_cells
    }

    /// Adds `delta` to one cell; returns true if the cell left the occupied
    /// class (the distance field then needs a rebuild).
    fn bump(&mut self, index: usize, delta: f64) -> bool {
        let clamp = self.l_clamp;
        let old = self.logodds[index];
        let new = (old + delta).clamp(-clamp, clamp);
        if new == old {
            return false;
        }
        Arc::make_mut(&mut self.logodds)[index] = new;
        let was = old > self.occ_logodds;
        let is = new > self.occ_logodds;
        match (was, is) {
            (false, true) => {
                self.occupied += 1;
                self.stamp(index);
                false
            }
            (true, false) => {
                self.occupied -= 1;
                true
            }
            _ => false,
        }
    }

    /// Sets one cell's log-odds directly (clamped), keeping the field valid.
    pub fn set_logodds(&mut self, ix: usize, iy: usize, value: f64) {
        let index = self.geometry.index(ix, iy);
        let delta = value.clamp(-self.l_clamp, self.l_clamp) - self.logodds[index];
        if self.bump(index, delta) {
            self.rebuild_field();
        }
    }

    fn stamp(&mut self, index: usize) {
        let (ox, oy) = self.geometry.coords(index);
        let r = self.field_cells as i64;
        let r2 = r * r;
        let (w, h) = (self.geometry.width as i64, self.geometry.height as i64);
        let dist2 = Arc::make_mut(&mut self.dist2);
        for dy in -r..=r {
            let y = oy as i64 + dy;
            if y < 0 || y >= h {
                continue;
            }
            for dx in -r..=r {
                let x = ox as i64 + dx;
                let d2 = dx * dx + dy * dy;
                if x < 0 || x >= w || d2 > r2 {
                    continue;
                }
                let slot = &mut dist2[(y * w + x) as usize];
                if (d2 as u16) < *slot {
                    *slot = d2 as u16;
                }
            }
        }
    }

    fn rebuild_field(&mut self) {
        self.dist2 = Arc::new(vec![FAR; self.geometry.len()]);
        self.occupied = 0;
        for index in 0..self.geometry.len() {
            if self.logodds[index] > self.occ_logodds {
                self.occupied += 1;
                self.stamp(index);
            }
        }
    }

    /// Updates the grid with one scan taken from `pose`: cells a beam passes
    /// through get `l_free`, the endpoint cell of a returned beam gets
    /// `l_occ`. No-return beams only clear.
    ///
    /// The endpoint is the cell whose entry face lies closest to the
    /// measured range, within `hit_extension` cells either side; failing
    /// that, the cell holding the hit point. A range that stops a little
    /// short of a face still lands in the obstacle behind it, and a ray
    /// grazing past a corner is not pushed out the other side.
    pub fn integrate_scan(&mut self, pose: &Pose, scan: &LaserScan, model: &SensorModel) {
        let g = self.geometry;
        let extension = model.hit_extension * g.resolution;
        let mut needs_rebuild = false;
        let mut cells = Vec::new();
        for (i, &range) in scan.ranges.iter().enumerate() {
            let angle = pose.yaw + scan.angle(i);
            let hit = range < scan.range_max;
            let length = if hit { range + extension } else { scan.range_max };
            cells.clear();
            cells.extend(GridRay::new(g, pose.x, pose.y, angle, length).take_while(|c| c.t_enter < length));
            let end = if hit { endpoint(&cells, range, extension) } else { None };
            let free = end.unwrap_or(cells.len());
            for c in &cells[..free] {
                needs_rebuild |= self.bump(g.index(c.ix, c.iy), model.l_free);
            }
            if let Some(e) = end {
                needs_rebuild |= self.bump(g.index(cells[e].ix, cells[e].iy), model.l_occ);
            }
        }
        if needs_rebuild {
            self.rebuild_field();
        }
    }
}

/// Index of the endpoint cell among the cells a returned beam crossed.
fn endpoint(cells: &[RayCell], range: f64, extension: f64) -> Option<usize> {
    let face = cells
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| (c.t_enter - range).abs() <= extension)
        .min_by(|a, b| (a.1.t_enter - range).abs().total_cmp(&(b.1.t_enter - range).abs()))
        .map(|(k, _)| k);
    face.or_else(|| cells.iter().rposition(|c| c.t_enter <= range))
}
