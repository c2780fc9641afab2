use super::grid::{OccupancyGrid, SensorModel};
use super::likelihood::ScanPoints;
use crate::geometry::{normalize_angle, Pose};
use crate::simworld::LaserScan;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub step_xy: f64,
    pub step_yaw: f64,
    pub halvings: u32,
    /// Cap on accepted moves per step size.
    pub max_moves_per_level: u32,
    /// Optional Gaussian prior (sigma_xy, sigma_yaw) centered on the seed.
    /// When set, the search maximizes likelihood plus log prior, which keeps
    /// the pose from sliding along directions the scan cannot constrain.
    #[serde(default)]
    pub prior: Option<(f64, f64)>,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            step_xy: 0.05,
            step_yaw: 0.02,
            halvings: 6,
            max_moves_per_level: 40,
            prior: None,
        }
    }
}

/// Greedy coordinate ascent of the scan likelihood (plus the optional prior)
/// over (x, y, yaw) with step halving. Returns the best pose found and its
/// objective, which is never below the seed's. A map without occupied cells
/// returns the seed.
pub fn scan_match(
    grid: &OccupancyGrid,
    scan: &LaserScan,
    seed: &Pose,
    model: &SensorModel,
    params: &MatchParams,
) -> (Pose, f64) {
    let points = ScanPoints::new(scan, model);
    let objective = |p: &Pose| {
        let lik = points.score(grid, p, model);
        match params.prior {
            None => lik,
            Some((sxy, syaw)) => {
                let d2 = (p.x - seed.x).powi(2) + (p.y - seed.y).powi(2);
                let dyaw = normalize_angle(p.yaw - seed.yaw);
                lik - 0.5 * (d2 / (sxy * sxy) + dyaw * dyaw / (syaw * syaw))
            }
        }
    };
    let mut best = *seed;
    let mut best_score = objective(&best);
    if grid.occupied_count() == 0 || points.is_empty() {
        return (best, best_score);
    }
    let (mut sxy, mut syaw) = (params.step_xy, params.step_yaw);
    for _ in 0..=params.halvings {
        for _ in 0..params.max_moves_per_level {
            let candidates = [
                Pose { x: best.x + sxy, ..best },
                Pose { x: best.x - sxy, ..best },
                Pose { y: best.y + sxy, ..best },
                Pose { y: best.y - sxy, ..best },
                Pose { yaw: normalize_angle(best.yaw + syaw), ..best },
                Pose { yaw: normalize_angle(best.yaw - syaw), ..best },
            ];
            let mut improved = None;
            let mut improved_score = best_score;
            for c in candidates {
                let s = objective(&c);
                if s > improved_score {
                    improved = Some(c);
                    improved_score = s;
                }
            }
            match improved {
                Some(p) => {
                    best = p;
                    best_score = improved_score;
                }
                None => break,
            }
        }
        sxy *= 0.5;
        syaw *= 0.5;
    }
    (best, best_score)
}
