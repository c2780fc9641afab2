use crate::geometry::{normalize_angle, Pose, Twist};

/// Exact integration of a constant body-frame twist over `dt`.
///
/// Horizontal motion follows the closed-form arc (straight line when
/// `|omega| < 1e-9`); altitude integrates `vz` and is clamped at the ground.
pub fn step_kinematics(pose: &Pose, cmd: &Twist, dt: f64) -> Pose {
    let th0 = pose.yaw;
    let (dx, dy) = if cmd.omega.abs() < 1e-9 {
        let (s, c) = th0.sin_cos();
        (
            (cmd.vx * c - cmd.vy * s) * dt,
            (cmd.vx * s + cmd.vy * c) * dt,
        )
    } else {
        let th1 = th0 + cmd.omega * dt;
        let (s0, c0) = th0.sin_cos();
        let (s1, c1) = th1.sin_cos();
        (
            (cmd.vx * (s1 - s0) + cmd.vy * (c1 - c0)) / cmd.omega,
            (cmd.vx * (c0 - c1) + cmd.vy * (s1 - s0)) / cmd.omega,
        )
    };
    Pose {
        x: pose.x + dx,
        y: pose.y + dy,
        yaw: normalize_angle(th0 + cmd.omega * dt),
        z: (pose.z + cmd.vz * dt).max(0.0),
    }
}
