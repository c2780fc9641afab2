//! Likelihood-field measurement model shared by SLAM and localization.

use super::grid::{OccupancyGrid, SensorModel, FAR};
use crate::geometry::Pose;
use crate::simworld::LaserScan;
use std::f64::consts::PI;

/// Log-likelihood contribution of one beam whose endpoint lies `distance`
/// meters from the nearest occupied cell (zero inside one).
pub fn beam_loglik(distance: f64, model: &SensorModel) -> f64 {
    let s = model.sigma_hit;
    let gauss = if distance.is_finite() {
        (-distance * distance / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt())
    } else {
        0.0
    };
    (gauss + model.z_floor).ln()
}

/// Body-frame endpoints of the scored beams of one scan, precomputed so a
/// pose search only pays for one rotation per beam.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoints {
    points: Vec<(f64, f64)>,
}

impl ScanPoints {
    pub fn new(scan: &LaserScan, model: &SensorModel) -> Self {
        let points = (0..scan.ranges.len())
            .step_by(model.beam_stride.max(1))
            .filter(|&i| scan.is_return(i))
            .map(|i| {
                let r = scan.ranges[i];
                let (s, c) = scan.angle(i).sin_cos();
                (r * c, r * s)
            })
            .collect();
        ScanPoints { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Summed beam log-likelihood at `pose`.
    pub fn score(&self, grid: &OccupancyGrid, pose: &Pose, model: &SensorModel) -> f64 {
        let (s, c) = pose.yaw.sin_cos();
        self.points
            .iter()
            .map(|&(bx, by)| {
                let x = pose.x + c * bx - s * by;
                let y = pose.y + s * bx + c * by;
                beam_loglik(interpolated_distance(grid, x, y), model)
            })
            .sum()
    }
}

/// Distance from a point to the nearest occupied cell's boundary: the
/// center-to-center field, interpolated bilinearly, less half a cell.
/// Returns infinity beyond the field radius or outside the grid.
fn interpolated_distance(grid: &OccupancyGrid, x: f64, y: f64) -> f64 {
    let g = grid.geometry();
    let (gx, gy) = g.to_grid(x, y);
    if !(gx >= 0.0 && gy >= 0.0 && gx < g.width as f64 && gy < g.height as f64) {
        return f64::INFINITY;
    }
    let cap = grid.field_cells() as f64;
    let dist2 = grid.dist2_raw();
    let corner = |ix: i64, iy: i64| -> f64 {
        let ix = ix.clamp(0, g.width as i64 - 1) as usize;
        let iy = iy.clamp(0, g.height as i64 - 1) as usize;
        match dist2[g.index(ix, iy)] {
            FAR => cap,
            d2 => (d2 as f64).sqrt(),
        }
    };
    let u = gx - 0.5;
    let v = gy - 0.5;
    let (i0, j0) = (u.floor() as i64, v.floor() as i64);
    let (fx, fy) = (u - i0 as f64, v - j0 as f64);
    let d00 = corner(i0, j0);
    let d10 = corner(i0 + 1, j0);
    let d01 = corner(i0, j0 + 1);
    let d11 = corner(i0 + 1, j0 + 1);
    let d = (1.0 - fy) * ((1.0 - fx) * d00 + fx * d10) + fy * ((1.0 - fx) * d01 + fx * d11);
    if d >= cap {
        f64::INFINITY
    } else {
        (d - 0.5).abs() * g.resolution
    }
}

/// Log-likelihood of a scan taken at `pose` against the grid's distance
/// field. Higher is better; always finite.
pub fn scan_likelihood(grid: &OccupancyGrid, pose: &Pose, scan: &LaserScan, model: &SensorModel) -> f64 {
    ScanPoints::new(scan, model).score(grid, pose, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raycast::GridGeometry;

    fn scan(angle_min: f64, inc: f64, ranges: Vec<f64>) -> LaserScan {
        LaserScan {
            angle_min,
            angle_increment: inc,
            ranges,
            range_max: 10.0,
            pose_stamp: Pose::default(),
            seq: 0,
        }
    }

    #[test]
    fn endpoints_on_occupied_centers_score_maximal() {
        let model = SensorModel {
            beam_stride: 1,
            ..SensorModel::default()
        };
        let geo = GridGeometry::new(20, 20, 0.25, 0.0, 0.0);
        let mut grid = OccupancyGrid::new(geo, &model);
        // pose at the center of cell (4, 10); wall cells at ix = 12
        let pose = Pose::new(1.125, 2.625, 0.0);
        for iy in 0..20 {
            grid.set_logodds(12, iy, 3.0);
        }
        // endpoints land on the near face of (12, 10)
        let s = scan(0.0, 0.0, vec![1.875, 1.875, 1.875]);
        let score = scan_likelihood(&grid, &pose, &s, &model);
        let per_beam = (1.0 / (0.2 * (2.0 * PI).sqrt()) + 1e-3f64).ln();
        assert!((score - 3.0 * per_beam).abs() < 1e-12);
        // the same distance past the face or short of it scores the same
        let inside = scan_likelihood(&grid, &Pose::new(1.2, 2.625, 0.0), &s, &model);
        let short = scan_likelihood(&grid, &Pose::new(1.05, 2.625, 0.0), &s, &model);
        assert!(inside < score);
        assert!((inside - short).abs() < 1e-9);
    }

    #[test]
    fn no_occupied_cells_scores_floor_only() {
        let model = SensorModel::default();
        let grid = OccupancyGrid::new(GridGeometry::new(20, 20, 0.25, 0.0, 0.0), &model);
        let s = scan(-1.0, 0.25, vec![1.0; 9]);
        let score = scan_likelihood(&grid, &Pose::new(2.5, 2.5, 0.0), &s, &model);
        // beams 0, 4, 8 are scored
        assert_eq!(score, 3.0 * model.z_floor.ln());
    }

    #[test]
    fn single_beam_matches_direct_formula() {
        let model = SensorModel {
            beam_stride: 1,
            ..SensorModel::default()
        };
        let mut grid = OccupancyGrid::new(GridGeometry::new(30, 30, 0.1, 0.0, 0.0), &model);
        grid.set_logodds(15, 15, 4.0);
        // endpoint on the near face of (14, 15): 0.1 m from the occupied cell
        let pose = Pose::new(0.4, 1.55, 0.0);
        let s = scan(0.0, 0.0, vec![1.0]);
        let got = scan_likelihood(&grid, &pose, &s, &model);
        let d: f64 = 0.1;
        let sigma: f64 = 0.2;
        let expected =
            ((-d * d / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt()) + 1e-3).ln();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn no_return_beams_are_ignored() {
        let model = SensorModel::default();
        let grid = OccupancyGrid::new(GridGeometry::new(20, 20, 0.25, 0.0, 0.0), &model);
        let s = scan(0.0, 0.1, vec![10.0; 8]);
        assert_eq!(scan_likelihood(&grid, &Pose::new(2.5, 2.5, 0.0), &s, &model), 0.0);
    }
}
