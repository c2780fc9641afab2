use super::world::World;
use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::raycast::GridRay;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Smallest range a noisy beam may report.
const MIN_RANGE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub beams: usize,
    pub angle_increment: f64,
    pub range_max: f64,
    pub sigma: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        LidarConfig {
            beams: 360,
            angle_increment: 1f64.to_radians(),
            range_max: 10.0,
            sigma: 0.01,
        }
    }
}

impl LidarConfig {
    /// Beams are laid out symmetrically about the heading.
    pub fn angle_min(&self) -> f64 {
        -(self.beams as f64 - 1.0) * self.angle_increment / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub angle_min: f64,
    pub angle_increment: f64,
    /// `range_max` means "no return".
    pub ranges: Vec<f64>,
    pub range_max: f64,
    /// Pose the scan was acquired from, in the frame of whoever stamped it.
    pub pose_stamp: Pose,
    pub seq: u64,
}

impl LaserScan {
    /// Body-frame beam angle.
    pub fn angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * self.angle_increment
    }

    pub fn is_return(&self, i: usize) -> bool {
        self.ranges[i] < self.range_max
    }

    /// Body-frame endpoints of every beam that returned.
    pub fn hit_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.ranges.len()).filter(|&i| self.is_return(i)).map(|i| {
            let (s, c) = self.angle(i).sin_cos();
            (self.ranges[i] * c, self.ranges[i] * s)
        })
    }
}

/// Raycasts every beam through the world to the first obstacle boundary.
pub fn simulate_scan<R: Rng + ?Sized>(
    world: &World,
    pose: &Pose,
    cfg: &LidarConfig,
    seq: u64,
    rng: &mut R,
) -> Result<LaserScan> {
    let g = *world.geometry();
    match g.cell_of(pose.x, pose.y) {
        None => return Err(Error::PoseOutOfBounds { x: pose.x, y: pose.y }),
        Some((ix, iy)) if world.is_obstacle(ix, iy) => {
            return Err(Error::PoseInObstacle { x: pose.x, y: pose.y })
        }
        Some(_) => {}
    }
    let noise = (cfg.sigma > 0.0).then(|| Normal::new(0.0, cfg.sigma).expect("finite sigma"));
    let angle_min = cfg.angle_min();
    let ranges = (0..cfg.beams)
        .map(|i| {
            let angle = pose.yaw + angle_min + i as f64 * cfg.angle_increment;
            let hit = GridRay::new(g, pose.x, pose.y, angle, cfg.range_max)
                .find(|c| world.is_obstacle(c.ix, c.iy))
                .map(|c| c.t_enter)
                .filter(|&t| t < cfg.range_max);
            match (hit, &noise) {
                (None, _) => cfg.range_max,
                (Some(r), None) => r.max(MIN_RANGE),
                (Some(r), Some(n)) => (r + n.sample(rng)).clamp(MIN_RANGE, cfg.range_max),
            }
        })
        .collect();
    Ok(LaserScan {
        angle_min,
        angle_increment: cfg.angle_increment,
        ranges,
        range_max: cfg.range_max,
        pose_stamp: *pose,
        seq,
    })
}
