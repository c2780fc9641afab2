//! Planar pose algebra shared by every node.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Wraps an angle into (-π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid maps -π to π already; guard the exact lower bound anyway
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Planar pose with altitude. `yaw` is kept in (-π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub z: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose {
            x,
            y,
            yaw: normalize_angle(yaw),
            z: 0.0,
        }
    }

    pub fn with_z(mut self, z: f64) -> Self {
        self.z = z;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.yaw.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Maps a point from this pose's body frame into the parent frame.
    pub fn transform_point(&self, bx: f64, by: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        (self.x + c * bx - s * by, self.y + s * bx + c * by)
    }

    /// `self ⊕ delta`: applies a body-frame relative pose.
    pub fn compose(&self, delta: &Pose) -> Pose {
        let (x, y) = self.transform_point(delta.x, delta.y);
        Pose {
            x,
            y,
            yaw: normalize_angle(self.yaw + delta.yaw),
            z: self.z + delta.z,
        }
    }

    /// `self ⊖ reference`: this pose expressed in the body frame of `reference`.
    pub fn relative_to(&self, reference: &Pose) -> Pose {
        let dx = self.x - reference.x;
        let dy = self.y - reference.y;
        let (s, c) = reference.yaw.sin_cos();
        Pose {
            x: c * dx + s * dy,
            y: -s * dx + c * dy,
            yaw: normalize_angle(self.yaw - reference.yaw),
            z: self.z - reference.z,
        }
    }
}

/// Body-frame velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
    pub vz: f64,
}

impl Twist {
    pub fn planar(vx: f64, omega: f64) -> Self {
        Twist {
            vx,
            vy: 0.0,
            omega,
            vz: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite() && self.vz.is_finite()
    }

    /// Clamps every component to its symmetric limit.
    pub fn clamped(&self, v_max: f64, omega_max: f64, vz_max: f64) -> Twist {
        Twist {
            vx: self.vx.clamp(-v_max, v_max),
            vy: self.vy.clamp(-v_max, v_max),
            omega: self.omega.clamp(-omega_max, omega_max),
            vz: self.vz.clamp(-vz_max, vz_max),
        }
    }
}

/// Odometry increment in rotate-translate-rotate form.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdomDelta {
    pub rot1: f64,
    pub trans: f64,
    pub rot2: f64,
}

impl OdomDelta {
    pub fn new(rot1: f64, trans: f64, rot2: f64) -> Self {
        OdomDelta { rot1, trans, rot2 }
    }

    /// Decomposes the motion between two odometry poses.
    pub fn between(from: &Pose, to: &Pose) -> Self {
        let dx = to.x - from.x;
        let dy = to.y - from.y;
        let trans = dx.hypot(dy);
        let rot1 = if trans < 1e-9 {
            0.0
        } else {
            normalize_angle(dy.atan2(dx) - from.yaw)
        };
        let rot2 = normalize_angle(to.yaw - from.yaw - rot1);
        OdomDelta { rot1, trans, rot2 }
    }

    /// Applies the increment to a pose (altitude untouched).
    pub fn apply(&self, pose: &Pose) -> Pose {
        let heading = pose.yaw + self.rot1;
        Pose {
            x: pose.x + self.trans * heading.cos(),
            y: pose.y + self.trans * heading.sin(),
            yaw: normalize_angle(pose.yaw + self.rot1 + self.rot2),
            z: pose.z,
        }
    }
}
