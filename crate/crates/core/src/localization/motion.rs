//! Odometry motion model in rotate-translate-rotate form.

use crate::geometry::{normalize_angle, OdomDelta, Pose};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Noise coefficients: rot←rot, rot←trans, trans←trans, trans←rot.
/// Each scales a variance, so σ² = αᵢ·δ² summed over the relevant terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdomAlphas(pub [f64; 4]);

impl Default for OdomAlphas {
    fn default() -> Self {
        OdomAlphas([0.05; 4])
    }
}

impl OdomAlphas {
    pub const ZERO: OdomAlphas = OdomAlphas([0.0; 4]);

    /// Standard deviations of (rot1, trans, rot2) for a given increment.
    pub fn sigmas(&self, delta: &OdomDelta) -> (f64, f64, f64) {
        let [a1, a2, a3, a4] = self.0;
        // a backwards step shows up as rot1 ≈ ±π; score its rotation noise
        // by the smaller equivalent turn
        let fold = |r: f64| r.abs().min((PI - r.abs()).abs());
        let r1 = fold(delta.rot1);
        let r2 = fold(delta.rot2);
        let t = delta.trans;
        (
            (a1 * r1 * r1 + a2 * t * t).sqrt(),
            (a3 * t * t + a4 * (r1 * r1 + r2 * r2)).sqrt(),
            (a1 * r2 * r2 + a2 * t * t).sqrt(),
        )
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        z * sigma
    } else {
        0.0
    }
}

/// Draws a noisy version of `delta` from the odometry model.
pub fn sample_delta<R: Rng + ?Sized>(delta: &OdomDelta, alphas: &OdomAlphas, rng: &mut R) -> OdomDelta {
    let (s1, st, s2) = alphas.sigmas(delta);
    OdomDelta {
        rot1: normalize_angle(delta.rot1 + gaussian(rng, s1)),
        trans: delta.trans + gaussian(rng, st),
        rot2: normalize_angle(delta.rot2 + gaussian(rng, s2)),
    }
}

/// Propagates one pose through a noisy odometry increment.
pub fn sample_odometry<R: Rng + ?Sized>(
    pose: &Pose,
    delta: &OdomDelta,
    alphas: &OdomAlphas,
    rng: &mut R,
) -> Pose {
    sample_delta(delta, alphas, rng).apply(pose)
}
