use super::kld::{kld_resample, KldConfig};
use super::motion::{sample_odometry, OdomAlphas};
use crate::geometry::{normalize_angle, OdomDelta, Pose};
use crate::mapping::{CellClass, OccupancyGrid, ScanPoints, SensorModel};
use crate::simworld::LaserScan;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Smallest weight a particle keeps after normalization.
const MIN_WEIGHT: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParticle {
    pub pose: Pose,
    pub weight: f64,
}

/// Covariance of (x, y, yaw), row-major.
pub type PoseCovariance = [[f64; 3]; 3];

/// Moves every particle through an independently sampled odometry
/// increment. Weights are left alone.
pub fn motion_update<R: Rng + ?Sized>(
    particles: &mut [McParticle],
    delta: &OdomDelta,
    alphas: &OdomAlphas,
    rng: &mut R,
) {
    for p in particles {
        let z = p.pose.z;
        p.pose = Pose {
            z,
            ..sample_odometry(&p.pose, delta, alphas, rng)
        };
    }
}

/// Multiplies weights by the scan likelihood and renormalizes. Returns
/// false when the weights collapsed and were reset to uniform.
pub fn measurement_update(
    particles: &mut [McParticle],
    map: &OccupancyGrid,
    scan: &LaserScan,
    model: &SensorModel,
) -> bool {
    let points = ScanPoints::new(scan, model);
    let log_weights: Vec<f64> = particles
        .iter()
        .map(|p| p.weight.ln() + points.score(map, &p.pose, model))
        .collect();
    let mut weights = vec![0.0; particles.len()];
    let ok = crate::mapping::normalize_log_weights(&log_weights, &mut weights);
    if !ok {
        weights.fill(1.0 / particles.len() as f64);
    } else if weights.iter().any(|&w| w < MIN_WEIGHT) {
        let mut sum = 0.0;
        for w in &mut weights {
            *w = w.max(MIN_WEIGHT);
            sum += *w;
        }
        for w in &mut weights {
            *w /= sum;
        }
    }
    for (p, w) in particles.iter_mut().zip(weights) {
        p.weight = w;
    }
    ok
}

/// Weighted mean (circular in yaw) and covariance with wrapped yaw
/// residuals.
pub fn estimate(particles: &[McParticle]) -> (Pose, PoseCovariance) {
    assert!(!particles.is_empty(), "estimate of an empty set");
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    let (mut mx, mut my, mut ms, mut mc) = (0.0, 0.0, 0.0, 0.0);
    for p in particles {
        let w = p.weight / total;
        mx += w * p.pose.x;
        my += w * p.pose.y;
        ms += w * p.pose.yaw.sin();
        mc += w * p.pose.yaw.cos();
    }
    let myaw = ms.atan2(mc);
    let mut cov = [[0.0; 3]; 3];
    for p in particles {
        let w = p.weight / total;
        let r = [p.pose.x - mx, p.pose.y - my, normalize_angle(p.pose.yaw - myaw)];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += w * r[i] * r[j];
            }
        }
    }
    (Pose::new(mx, my, myaw), cov)
}

/// CSV rows `step,x,y,yaw,weight` for plotting particle clouds.
pub fn write_particles_csv<W: Write>(out: &mut W, step: u64, particles: &[McParticle]) -> std::io::Result<()> {
    for p in particles {
        writeln!(out, "{step},{},{},{},{}", p.pose.x, p.pose.y, p.pose.yaw, p.weight)?;
    }
    Ok(())
}

/// A particle filter bundled with its configuration and diagnostics.
#[derive(Debug, Clone)]
pub struct MonteCarloLocalizer {
    pub particles: Vec<McParticle>,
    pub kld: KldConfig,
    pub alphas: OdomAlphas,
    pub sensor: SensorModel,
    pub degeneracies: u64,
}

impl MonteCarloLocalizer {
    /// `n` particles drawn from independent Gaussians around `center`.
    #[allow(clippy::too_many_arguments)]
    pub fn around<R: Rng + ?Sized>(
        center: &Pose,
        n: usize,
        sigma_xy: f64,
        sigma_yaw: f64,
        kld: KldConfig,
        alphas: OdomAlphas,
        sensor: SensorModel,
        rng: &mut R,
    ) -> Self {
        let nxy = Normal::new(0.0, sigma_xy.max(0.0)).expect("finite sigma");
        let nyaw = Normal::new(0.0, sigma_yaw.max(0.0)).expect("finite sigma");
        let w = 1.0 / n as f64;
        let particles = (0..n)
            .map(|_| {
                let x = center.x + nxy.sample(rng);
                let y = center.y + nxy.sample(rng);
                let yaw = center.yaw + nyaw.sample(rng);
                McParticle {
                    pose: Pose::new(x, y, yaw).with_z(center.z),
                    weight: w,
                }
            })
            .collect();
        MonteCarloLocalizer {
            particles,
            kld,
            alphas,
            sensor,
            degeneracies: 0,
        }
    }

    /// `n` particles spread uniformly over the map's free cells.
    pub fn global<R: Rng + ?Sized>(
        map: &OccupancyGrid,
        n: usize,
        kld: KldConfig,
        alphas: OdomAlphas,
        sensor: SensorModel,
        rng: &mut R,
    ) -> Self {
        let g = map.geometry();
        let free: Vec<usize> = (0..g.len()).filter(|&i| map.class_of(i) == CellClass::Free).collect();
        assert!(!free.is_empty(), "global initialization needs free cells");
        let w = 1.0 / n as f64;
        let particles = (0..n)
            .map(|_| {
                let (ix, iy) = g.coords(free[rng.random_range(0..free.len())]);
                let x = g.origin_x + (ix as f64 + rng.random::<f64>()) * g.resolution;
                let y = g.origin_y + (iy as f64 + rng.random::<f64>()) * g.resolution;
                let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                McParticle {
                    pose: Pose::new(x, y, yaw),
                    weight: w,
                }
            })
            .collect();
        MonteCarloLocalizer {
            particles,
            kld,
            alphas,
            sensor,
            degeneracies: 0,
        }
    }

    /// Motion, measurement, then KLD resampling.
    pub fn step<R: Rng + ?Sized>(&mut self, delta: &OdomDelta, map: &OccupancyGrid, scan: &LaserScan, rng: &mut R) {
        motion_update(&mut self.particles, delta, &self.alphas, rng);
        if !measurement_update(&mut self.particles, map, scan, &self.sensor) {
            self.degeneracies += 1;
        }
        self.particles = kld_resample(&self.particles, &self.kld, rng);
    }

    pub fn estimate(&self) -> (Pose, PoseCovariance) {
        estimate(&self.particles)
    }
}
