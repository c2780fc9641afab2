use super::mcl::McParticle;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::HashSet;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KldConfig {
    /// Bound on the K-L divergence between sample and true posterior.
    pub epsilon: f64,
    /// The bound holds with probability 1 - delta.
    pub delta: f64,
    pub bin_xy: f64,
    pub bin_yaw: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for KldConfig {
    fn default() -> Self {
        KldConfig {
            epsilon: 0.05,
            delta: 0.01,
            bin_xy: 0.5,
            bin_yaw: PI / 18.0,
            n_min: 100,
            n_max: 5000,
        }
    }
}

impl KldConfig {
    /// Upper (1 - delta) quantile of the standard normal.
    pub fn z_quantile(&self) -> f64 {
        Normal::new(0.0, 1.0)
            .expect("unit normal")
            .inverse_cdf(1.0 - self.delta)
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if !(self.epsilon > 0.0) {
            return Err("kld epsilon must be positive".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err("kld delta must lie in (0, 1)".into());
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err("kld particle bounds need 0 < n_min <= n_max".into());
        }
        if !(self.bin_xy > 0.0 && self.bin_yaw > 0.0) {
            return Err("kld bin sizes must be positive".into());
        }
        Ok(())
    }

    fn bin_of(&self, p: &McParticle) -> (i64, i64, i64) {
        (
            (p.pose.x / self.bin_xy).floor() as i64,
            (p.pose.y / self.bin_xy).floor() as i64,
            (p.pose.yaw / self.bin_yaw).floor() as i64,
        )
    }
}

/// Wilson–Hilferty chi-square bound on the number of samples needed so
/// that, with `k` occupied bins, the K-L error stays below epsilon.
/// Clamped to `[n_min, n_max]`; `k <= 1` yields `n_min`.
pub fn kld_sample_size(k: usize, cfg: &KldConfig) -> usize {
    if k <= 1 {
        return cfg.n_min;
    }
    let km1 = (k - 1) as f64;
    let a = 2.0 / (9.0 * km1);
    let base = 1.0 - a + a.sqrt() * cfg.z_quantile();
    let n = (km1 / (2.0 * cfg.epsilon) * base.powi(3)).ceil();
    (n.max(0.0) as usize).clamp(cfg.n_min, cfg.n_max)
}

/// Draws particles with replacement in proportion to weight, growing the
/// set until it reaches the KLD bound for the bins hit so far. Output
/// weights are uniform.
pub fn kld_resample<R: Rng + ?Sized>(particles: &[McParticle], cfg: &KldConfig, rng: &mut R) -> Vec<McParticle> {
    assert!(!particles.is_empty(), "cannot resample an empty set");
    let mut cdf = Vec::with_capacity(particles.len());
    let mut acc = 0.0;
    for p in particles {
        acc += p.weight;
        cdf.push(acc);
    }
    let total = acc;
    let mut bins = HashSet::new();
    let mut out: Vec<McParticle> = Vec::with_capacity(cfg.n_min);
    let mut target = cfg.n_min;
    while out.len() < target.min(cfg.n_max) {
        let u = rng.random::<f64>() * total;
        let i = cdf.partition_point(|&c| c <= u).min(particles.len() - 1);
        let drawn = particles[i];
        if bins.insert(cfg.bin_of(&drawn)) {
            target = kld_sample_size(bins.len(), cfg);
        }
        out.push(drawn);
    }
    let w = 1.0 / out.len() as f64;
    for p in &mut out {
        p.weight = w;
    }
    out
}
