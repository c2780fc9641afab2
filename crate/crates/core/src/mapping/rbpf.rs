use super::grid::{OccupancyGrid, SensorModel};
use super::likelihood::ScanPoints;
use super::matcher::{scan_match, MatchParams};
use crate::geometry::{OdomDelta, Pose};
use crate::localization::{sample_odometry, OdomAlphas};
use crate::simworld::LaserScan;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One SLAM hypothesis: a pose, its weight and the map built along its
/// trajectory.
#[derive(Debug, Clone)]
pub struct SlamParticle {
    pub pose: Pose,
    pub weight: f64,
    pub map: OccupancyGrid,
    /// Filled only when `RbpfConfig::record_trajectory` is set.
    pub trajectory: Vec<Pose>,
}

impl SlamParticle {
    pub fn new(pose: Pose, weight: f64, map: OccupancyGrid) -> Self {
        SlamParticle {
            pose,
            weight,
            map,
            trajectory: Vec::new(),
        }
    }

    /// `n` identical particles with uniform weights.
    pub fn initial_set(n: usize, pose: Pose, map: OccupancyGrid) -> Vec<SlamParticle> {
        let w = 1.0 / n as f64;
        (0..n).map(|_| SlamParticle::new(pose, w, map.clone())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbpfConfig {
    pub alphas: OdomAlphas,
    pub resample_threshold: f64,
    pub sensor: SensorModel,
    pub matcher: MatchParams,
    pub record_trajectory: bool,
}

impl Default for RbpfConfig {
    fn default() -> Self {
        RbpfConfig {
            alphas: OdomAlphas::default(),
            resample_threshold: 0.5,
            sensor: SensorModel::default(),
            matcher: MatchParams::default(),
            record_trajectory: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RbpfStats {
    /// Effective sample size after reweighting, before resampling.
    pub n_eff: f64,
    pub resampled: bool,
    /// Weights collapsed to zero (or non-finite) and were reset to uniform.
    pub degenerate: bool,
    /// Index, in the updated set, of the particle that carried the largest
    /// weight before resampling.
    pub best: usize,
}

/// `1 / Σ w²` for normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling with a single random offset. Returns the indices
/// of the survivors, in nondecreasing order.
pub fn low_variance_resample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Vec<usize> {
    let n = weights.len();
    let step = 1.0 / n as f64;
    let r = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut c = weights[0];
    let mut i = 0;
    for m in 0..n {
        let u = r + m as f64 * step;
        while u > c && i + 1 < n {
            i += 1;
            c += weights[i];
        }
        out.push(i);
    }
    out
}

/// Normalizes log-weights in place into `weights`; returns false when
/// nothing finite survives.
pub(crate) fn normalize_log_weights(log_weights: &[f64], weights: &mut [f64]) -> bool {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return false;
    }
    let mut sum = 0.0;
    for (w, &lw) in weights.iter_mut().zip(log_weights) {
        *w = (lw - max).exp();
        sum += *w;
    }
    if !(sum > 0.0 && sum.is_finite()) {
        return false;
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    true
}

/// One filter step: sample each particle's pose from the odometry model,
/// refine it by scan matching against its own map, weight it by the scan
/// likelihood there, and fold the scan into its map. Resamples when the
/// effective sample size drops below `resample_threshold · N`.
pub fn rbpf_update<R: Rng + ?Sized>(
    particles: &mut Vec<SlamParticle>,
    odom: &OdomDelta,
    scan: &LaserScan,
    cfg: &RbpfConfig,
    rng: &mut R,
) -> RbpfStats {
    assert!(!particles.is_empty(), "RBPF needs at least one particle");
    let n = particles.len();
    let mut log_weights = Vec::with_capacity(n);
    for p in particles.iter_mut() {
        let proposal = sample_odometry(&p.pose, odom, &cfg.alphas, rng);
        let (refined, _) = scan_match(&p.map, scan, &proposal, &cfg.sensor, &cfg.matcher);
        let points = ScanPoints::new(scan, &cfg.sensor);
        let loglik = points.score(&p.map, &refined, &cfg.sensor);
        log_weights.push(p.weight.ln() + loglik);
        p.pose = Pose { z: p.pose.z, ..refined };
        p.map.integrate_scan(&p.pose, scan, &cfg.sensor);
        if cfg.record_trajectory {
            p.trajectory.push(p.pose);
        }
    }

    let mut weights = vec![0.0; n];
    let degenerate = !normalize_log_weights(&log_weights, &mut weights);
    if degenerate {
        weights.fill(1.0 / n as f64);
    }
    for (p, w) in particles.iter_mut().zip(&weights) {
        p.weight = *w;
    }
    let n_eff = effective_sample_size(&weights);
    let resampled = n_eff < cfg.resample_threshold * n as f64;
    let mut best = best_particle_index(particles);
    if resampled {
        let survivors = low_variance_resample(&weights, rng);
        // The heaviest particle has weight >= 1/n, so systematic resampling
        // always keeps a copy of it.
        best = survivors.iter().position(|&i| i == best).unwrap_or(0);
        let next: Vec<SlamParticle> = survivors
            .into_iter()
            .map(|i| SlamParticle {
                weight: 1.0 / n as f64,
                ..particles[i].clone()
            })
            .collect();
        *particles = next;
    }
    RbpfStats {
        n_eff,
        resampled,
        degenerate,
        best,
    }
}

/// Index of the heaviest particle; ties go to the lowest index.
pub fn best_particle_index(particles: &[SlamParticle]) -> usize {
    let mut best = 0;
    for (i, p) in particles.iter().enumerate() {
        if p.weight > particles[best].weight {
            best = i;
        }
    }
    best
}

/// Map of the heaviest particle.
pub fn best_map(particles: &[SlamParticle]) -> &OccupancyGrid {
    &particles[best_particle_index(particles)].map
}
