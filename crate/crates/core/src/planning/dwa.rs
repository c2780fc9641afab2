use super::astar::Path;
use crate::geometry::{normalize_angle, Pose, Twist};
use crate::simworld::step_kinematics;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Slack below the starting clearance tolerated inside the safety margin.
const MARGIN_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwaConfig {
    pub v_max: f64,
    /// Sideways velocity is never commanded while following a path; the
    /// flag is carried for completeness.
    pub allow_vy: bool,
    pub omega_max: f64,
    pub accel_v: f64,
    pub accel_omega: f64,
    /// Forward simulation horizon, seconds.
    pub horizon: f64,
    pub dt_traj: f64,
    pub n_v: usize,
    pub n_omega: usize,
    pub w_heading: f64,
    pub w_clearance: f64,
    pub w_velocity: f64,
    pub robot_radius: f64,
    /// Extra clearance kept from scan points on top of the robot radius.
    pub safety_margin: f64,
    /// Control period: width of the dynamic window and of the executed step.
    pub control_dt: f64,
    pub lookahead: f64,
    /// Clearances above this are scored equally.
    pub clearance_cap: f64,
}

impl Default for DwaConfig {
    fn default() -> Self {
        DwaConfig {
            v_max: 0.5,
            allow_vy: false,
            omega_max: 1.0,
            accel_v: 1.0,
            accel_omega: 2.0,
            horizon: 1.5,
            dt_traj: 0.1,
            n_v: 11,
            n_omega: 21,
            w_heading: 0.8,
            w_clearance: 0.1,
            w_velocity: 0.1,
            robot_radius: 0.3,
            safety_margin: 0.05,
            control_dt: 0.05,
            lookahead: 1.0,
            clearance_cap: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DwaCommand {
    Move(Twist),
    Stop,
}

impl DwaCommand {
    pub fn twist(&self) -> Twist {
        match self {
            DwaCommand::Move(t) => *t,
            DwaCommand::Stop => Twist::default(),
        }
    }
}

/// Evaluation of one (v, ω) pair of the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwaSample {
    pub v: f64,
    pub omega: f64,
    /// Arc length available before the footprint reaches an obstacle.
    pub dist: f64,
    pub admissible: bool,
    pub heading: f64,
    pub clearance: f64,
    pub velocity: f64,
}

fn nearest_distance(x: f64, y: f64, obstacles: &[(f64, f64)]) -> f64 {
    obstacles
        .iter()
        .map(|&(ox, oy)| (ox - x) * (ox - x) + (oy - y) * (oy - y))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Free arc length along the constant-(v, ω) trajectory and the smallest
/// clearance (distance minus robot radius) seen along it.
///
/// The footprint counts as blocked once it comes within `robot_radius +
/// safety_margin` of a point; a robot already inside that band may move as
/// long as it does not get closer.
pub fn free_arc_length(pose: &Pose, v: f64, omega: f64, obstacles: &[(f64, f64)], cfg: &DwaConfig) -> (f64, f64) {
    let d0 = nearest_distance(pose.x, pose.y, obstacles);
    let blocked_below = (cfg.robot_radius + cfg.safety_margin)
        .min(d0 - MARGIN_SLACK)
        .max(cfg.robot_radius);
    let mut min_clearance = d0 - cfg.robot_radius;
    if d0 < blocked_below {
        return (0.0, min_clearance);
    }
    let steps = (cfg.horizon / cfg.dt_traj).ceil() as usize;
    let twist = Twist::planar(v, omega);
    for k in 1..=steps {
        let t = (k as f64 * cfg.dt_traj).min(cfg.horizon);
        let p = step_kinematics(pose, &twist, t);
        let d = nearest_distance(p.x, p.y, obstacles);
        min_clearance = min_clearance.min(d - cfg.robot_radius);
        if d < blocked_below {
            let prev = ((k - 1) as f64 * cfg.dt_traj).min(cfg.horizon);
            return (v.abs() * prev, min_clearance);
        }
    }
    (f64::INFINITY, min_clearance)
}

/// A pair is admissible when executing it for one control period and then
/// braking at `accel_v` fits inside the free arc:
/// `v·dt + v²/(2a) ≤ dist`, which implies `v ≤ sqrt(2·a·dist)`.
pub fn is_admissible(v: f64, dist: f64, cfg: &DwaConfig) -> bool {
    let v = v.abs();
    v * cfg.control_dt + v * v / (2.0 * cfg.accel_v) <= dist
}

/// First waypoint at least `lookahead` ahead of the closest waypoint, or
/// the path's end.
pub fn carrot_point(pose: &Pose, path: &Path, lookahead: f64) -> (f64, f64) {
    let d = |p: &(f64, f64)| (p.0 - pose.x).hypot(p.1 - pose.y);
    let closest = path
        .points
        .iter()
        .enumerate()
        .min_by(|a, b| d(a.1).total_cmp(&d(b.1)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    path.points[closest..]
        .iter()
        .find(|p| d(p) >= lookahead)
        .copied()
        .unwrap_or_else(|| path.goal())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi - lo <= 0.0 {
        return vec![(lo + hi) / 2.0];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Scores every (v, ω) pair of the dynamic window. Objective terms are
/// normalized over the admissible pairs only.
pub fn evaluate_window(
    pose: &Pose,
    vel: &Twist,
    carrot: (f64, f64),
    obstacles: &[(f64, f64)],
    cfg: &DwaConfig,
) -> Vec<DwaSample> {
    let v_lo = (vel.vx - cfg.accel_v * cfg.control_dt).max(0.0);
    let v_hi = (vel.vx + cfg.accel_v * cfg.control_dt).min(cfg.v_max);
    let w_lo = (vel.omega - cfg.accel_omega * cfg.control_dt).max(-cfg.omega_max);
    let w_hi = (vel.omega + cfg.accel_omega * cfg.control_dt).min(cfg.omega_max);
    let (v_lo, v_hi) = if v_lo > v_hi { (v_hi, v_hi) } else { (v_lo, v_hi) };
    let (w_lo, w_hi) = if w_lo > w_hi { (w_hi, w_hi) } else { (w_lo, w_hi) };

    let reach = v_hi * cfg.horizon + cfg.robot_radius + cfg.safety_margin + cfg.clearance_cap + 0.1;
    let local: Vec<(f64, f64)> = obstacles
        .iter()
        .copied()
        .filter(|&(x, y)| (x - pose.x).hypot(y - pose.y) <= reach)
        .collect();

    let mut samples = Vec::with_capacity(cfg.n_v * cfg.n_omega);
    for &v in &linspace(v_lo, v_hi, cfg.n_v) {
        for &omega in &linspace(w_lo, w_hi, cfg.n_omega) {
            let (dist, clearance) = free_arc_length(pose, v, omega, &local, cfg);
            let end = step_kinematics(pose, &Twist::planar(v, omega), cfg.horizon);
            let (dx, dy) = (carrot.0 - end.x, carrot.1 - end.y);
            let heading = if dx.hypot(dy) < 1e-9 {
                1.0
            } else {
                1.0 - normalize_angle(dy.atan2(dx) - end.yaw).abs() / PI
            };
            samples.push(DwaSample {
                v,
                omega,
                dist,
                admissible: is_admissible(v, dist, cfg),
                heading,
                clearance: clearance.clamp(0.0, cfg.clearance_cap),
                velocity: v,
            });
        }
    }
    samples
}

fn normalizer(values: impl Iterator<Item = f64> + Clone) -> impl Fn(f64) -> f64 {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    move |x| if hi - lo > 1e-12 { (x - lo) / (hi - lo) } else { 0.0 }
}

/// Picks the admissible pair maximizing the weighted, window-normalized
/// heading/clearance/velocity objective. Ties prefer lower |ω|, then lower
/// v. `Stop` when nothing in the window is admissible.
pub fn dwa_command(
    pose: &Pose,
    vel: &Twist,
    path: &Path,
    obstacles: &[(f64, f64)],
    cfg: &DwaConfig,
) -> DwaCommand {
    assert!(!path.is_empty(), "DWA needs a path");
    let carrot = carrot_point(pose, path, cfg.lookahead);
    let samples = evaluate_window(pose, vel, carrot, obstacles, cfg);
    let admissible: Vec<&DwaSample> = samples.iter().filter(|s| s.admissible).collect();
    if admissible.is_empty() {
        return DwaCommand::Stop;
    }
    let nh = normalizer(admissible.iter().map(|s| s.heading));
    let nc = normalizer(admissible.iter().map(|s| s.clearance));
    let nv = normalizer(admissible.iter().map(|s| s.velocity));
    let score = |s: &DwaSample| cfg.w_heading * nh(s.heading) + cfg.w_clearance * nc(s.clearance) + cfg.w_velocity * nv(s.velocity);

    let mut best = admissible[0];
    let mut best_score = score(best);
    for &s in &admissible[1..] {
        let sc = score(s);
        let tol = 1e-12 * sc.abs().max(best_score.abs());
        let better = if (sc - best_score).abs() <= tol {
            (s.omega.abs(), s.v, s.omega) < (best.omega.abs(), best.v, best.omega)
        } else {
            sc > best_score
        };
        if better {
            best = s;
            best_score = sc;
        }
    }
    DwaCommand::Move(Twist::planar(best.v, best.omega))
}

/// Poses visited when `(v, ω)` is held for one control period and the
/// robot then brakes at `accel_v` along the same curvature.
pub fn brake_rollout(pose: &Pose, v: f64, omega: f64, cfg: &DwaConfig, substep: f64) -> Vec<Pose> {
    let mut out = vec![*pose];
    let mut p = *pose;
    let hold_steps = (cfg.control_dt / substep).ceil() as usize;
    let h = cfg.control_dt / hold_steps as f64;
    for _ in 0..hold_steps {
        p = step_kinematics(&p, &Twist::planar(v, omega), h);
        out.push(p);
    }
    if v.abs() < 1e-12 {
        return out;
    }
    let curvature = omega / v;
    let t_stop = v.abs() / cfg.accel_v;
    let brake_steps = (t_stop / substep).ceil().max(1.0) as usize;
    let h = t_stop / brake_steps as f64;
    for k in 0..brake_steps {
        let va = v - v.signum() * cfg.accel_v * h * k as f64;
        let vb = v - v.signum() * cfg.accel_v * h * (k + 1) as f64;
        let vm = 0.5 * (va + vb);
        p = step_kinematics(&p, &Twist::planar(vm, curvature * vm), h);
        out.push(p);
    }
    out
}

/// Inclusive position and yaw tolerance test.
pub fn goal_reached(pose: &Pose, goal: &Pose, tol_xy: f64, tol_yaw: f64) -> bool {
    pose.distance(goal) <= tol_xy && normalize_angle(pose.yaw - goal.yaw).abs() <= tol_yaw
}
