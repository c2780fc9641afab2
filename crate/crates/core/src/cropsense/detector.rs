use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::simworld::{CellKind, CropClass, World};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Detection model standing in for the leaf detector plus classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorProfile {
    /// Frames processed per second of simulated time.
    pub rate_hz: f64,
    /// Probability that a crop cell in view yields a detection in a frame.
    pub leaf_recall: f64,
    /// Rows are the true class, columns the predicted class, in
    /// Brown, Yellow, Healthy order.
    pub confusion: [[f64; 3]; 3],
    /// Radius of the camera's ground footprint, meters.
    pub fov_radius: f64,
}

impl Default for DetectorProfile {
    fn default() -> Self {
        profile_from_paper()
    }
}

/// The measured detector: 42.3 frames/s, leaf recall 0.19, and a
/// classifier whose only test-set error was one brown-rust leaf labelled
/// yellow-rust out of 112.
pub fn profile_from_paper() -> DetectorProfile {
    DetectorProfile {
        rate_hz: 42.3,
        leaf_recall: 0.19,
        confusion: [[111.0 / 112.0, 1.0 / 112.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        fov_radius: 1.0,
    }
}

impl DetectorProfile {
    pub fn identity() -> Self {
        DetectorProfile {
            confusion: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            leaf_recall: 1.0,
            ..profile_from_paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Profile(m));
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return bad(format!("rate_hz must be positive, got {}", self.rate_hz));
        }
        if !(0.0..=1.0).contains(&self.leaf_recall) {
            return bad(format!("leaf_recall must lie in [0, 1], got {}", self.leaf_recall));
        }
        if !(self.fov_radius >= 0.0 && self.fov_radius.is_finite()) {
            return bad(format!("fov_radius must be nonnegative, got {}", self.fov_radius));
        }
        for (r, row) in self.confusion.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                return bad(format!("confusion row {r} has a negative or non-finite entry"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return bad(format!("confusion row {r} sums to {sum}"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: DetectorProfile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }
}

/// Converts control ticks to detector frames: tick `t` carries
/// `floor((t+1)·dt·rate) − floor(t·dt·rate)` frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionClock {
    pub rate_hz: f64,
    pub dt: f64,
}

impl DetectionClock {
    pub fn new(rate_hz: f64, dt: f64) -> Self {
        DetectionClock { rate_hz, dt }
    }

    /// Frames completed by the end of `ticks` ticks.
    pub fn frames_by(&self, ticks: u64) -> u64 {
        (ticks as f64 * self.dt * self.rate_hz + 1e-9).floor() as u64
    }

    pub fn frames_in_tick(&self, tick: u64) -> u64 {
        self.frames_by(tick + 1) - self.frames_by(tick)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiseaseObservation {
    pub cell: usize,
    pub predicted: CropClass,
    pub tick: u64,
    pub observer: Pose,
}

/// Draws a predicted class from the confusion row of `truth`.
pub fn classify<R: Rng + ?Sized>(truth: CropClass, profile: &DetectorProfile, rng: &mut R) -> CropClass {
    let row = &profile.confusion[truth.index()];
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return CropClass::from_index(j).unwrap();
        }
    }
    // Rounding left u above the row sum: take the last nonzero column.
    let j = row.iter().rposition(|&p| p > 0.0).unwrap_or(truth.index());
    CropClass::from_index(j).unwrap()
}

/// One detector frame: every crop cell whose center lies within the
/// footprint is detected with probability `leaf_recall` and classified
/// through the confusion matrix. Cells are visited in row-major order.
pub fn observe<R: Rng + ?Sized>(
    world: &World,
    pose: &Pose,
    profile: &DetectorProfile,
    tick: u64,
    rng: &mut R,
) -> Vec<DiseaseObservation> {
    let g = world.geometry();
    let r = profile.fov_radius;
    let (gx0, gy0) = g.to_grid(pose.x - r, pose.y - r);
    let (gx1, gy1) = g.to_grid(pose.x + r, pose.y + r);
    let clamp_x = |v: f64| (v.floor().max(0.0) as usize).min(g.width.saturating_sub(1));
    let clamp_y = |v: f64| (v.floor().max(0.0) as usize).min(g.height.saturating_sub(1));
    let mut out = Vec::new();
    if gx1 < 0.0 || gy1 < 0.0 || gx0 >= g.width as f64 || gy0 >= g.height as f64 {
        return out;
    }
    for iy in clamp_y(gy0)..=clamp_y(gy1) {
        for ix in clamp_x(gx0)..=clamp_x(gx1) {
            let CellKind::Crop(truth) = world.cell(ix, iy) else { continue };
            let (cx, cy) = g.cell_center(ix, iy);
            if (cx - pose.x).hypot(cy - pose.y) > r {
                continue;
            }
            if rng.random::<f64>() >= profile.leaf_recall {
                continue;
            }
            out.push(DiseaseObservation {
                cell: g.index(ix, iy),
                predicted: classify(truth, profile, rng),
                tick,
                observer: *pose,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_profile_numbers() {
        let p = profile_from_paper();
        assert_eq!(p.rate_hz, 42.3);
        assert!((p.confusion[0][0] - 0.99).abs() < 0.005);
        p.validate().unwrap();
    }

    #[test]
    fn clock_counts_frames() {
        let c = DetectionClock::new(42.3, 0.05);
        assert_eq!(c.frames_by(20), 42);
        assert_eq!(c.frames_by(200), 423);
        let total: u64 = (0..2000).map(|t| c.frames_in_tick(t)).sum();
        assert_eq!(total, c.frames_by(2000));
    }

    #[test]
    fn rejects_bad_rows() {
        let mut p = profile_from_paper();
        p.confusion[1] = [0.5, 0.6, 0.0];
        assert!(p.validate().is_err());
        p.confusion[1] = [-0.1, 1.1, 0.0];
        assert!(p.validate().is_err());
    }

    #[test]
    fn empty_footprint_yields_nothing() {
        let world = World::filled(10, 10, 0.25, CellKind::Free).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(observe(&world, &Pose::new(1.0, 1.0, 0.0), &DetectorProfile::identity(), 0, &mut rng).is_empty());
    }

    #[test]
    fn identity_sees_every_crop_in_view() {
        let mut world = World::filled(10, 10, 0.25, CellKind::Free).unwrap();
        world.set_cell(4, 4, CellKind::Crop(CropClass::Yellow));
        world.set_cell(5, 4, CellKind::Crop(CropClass::Brown));
        world.set_cell(9, 9, CellKind::Crop(CropClass::Healthy));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = observe(&world, &Pose::new(1.25, 1.25, 0.0), &DetectorProfile::identity(), 7, &mut rng);
        let got: Vec<(usize, CropClass)> = obs.iter().map(|o| (o.cell, o.predicted)).collect();
        assert_eq!(got, vec![(44, CropClass::Yellow), (45, CropClass::Brown)]);
        assert!(obs.iter().all(|o| o.tick == 7));
    }
}
