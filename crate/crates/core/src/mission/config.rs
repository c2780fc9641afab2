use crate::cropsense::{profile_from_paper, DetectorProfile};
use crate::error::{Error, Result};
use crate::exploration::GoalWeights;
use crate::geometry::Pose;
use crate::localization::{KldConfig, OdomAlphas};
use crate::mapping::{MatchParams, RbpfConfig, SensorModel};
use crate::planning::{DwaConfig, InflationConfig};
use crate::simworld::LidarConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Every mission knob. The text form is one `key = value` per line; `#`
/// starts a comment, lists are comma separated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub dt: f64,
    pub tick_budget: u64,
    pub start_pose: [f64; 3],

    pub lidar_every: u64,
    pub lidar_beams: usize,
    pub lidar_increment_deg: f64,
    pub lidar_range_max: f64,
    pub lidar_sigma: f64,
    /// Odometry drift, as variance coefficients of the motion model.
    pub odom_alphas: [f64; 4],

    pub slam_particles: usize,
    pub slam_alphas: [f64; 4],
    pub slam_resample_threshold: f64,
    pub slam_gate_dist: f64,
    pub slam_gate_yaw: f64,
    /// Scan-matcher prior around each particle's proposal; zero disables.
    pub slam_prior_xy: f64,
    pub slam_prior_yaw: f64,
    /// Degenerate weight updates tolerated before the mission aborts.
    pub slam_degeneracy_limit: u64,

    pub altitude: f64,
    pub pid_kp: f64,
    pub pid_ki: f64,
    pub pid_kd: f64,
    pub pid_i_max: f64,
    pub vz_max: f64,
    pub altitude_tau: f64,
    pub takeoff_tol: f64,
    pub takeoff_settle_ticks: u64,
    pub takeoff_max_ticks: u64,

    pub robot_radius: f64,
    /// Added to the robot radius for the inscribed band of the costmap.
    pub inflation_padding: f64,
    pub decay_radius: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub accel_v: f64,
    pub accel_omega: f64,
    pub dwa_horizon: f64,
    pub dwa_dt_traj: f64,
    pub dwa_n_v: usize,
    pub dwa_n_omega: usize,
    pub dwa_w_heading: f64,
    pub dwa_w_clearance: f64,
    pub dwa_w_velocity: f64,
    pub dwa_safety_margin: f64,
    pub dwa_lookahead: f64,
    pub replan_ticks: u64,
    pub stop_timeout_ticks: u64,
    pub goal_timeout_ticks: u64,
    pub goal_tol_xy: f64,
    /// How far a blocked goal may be moved to the nearest reachable cell.
    pub snap_tolerance: f64,

    pub frontier_min_cluster: usize,
    pub explore_w_dist: f64,
    /// Defaults to half the map resolution per cell.
    pub explore_w_size: Option<f64>,
    pub blacklist_radius: f64,
    pub blacklist_failures: u32,
    pub explore_max_ticks: u64,
    pub frontier_snapshots: bool,

    pub survey_enabled: bool,
    pub survey_lane_spacing: f64,
    pub survey_coverage_target: f64,
    pub survey_max_ticks: u64,
    /// Lane stretches are only swept within this distance of observed crop.
    pub survey_margin: f64,

    pub detector_rate: f64,
    pub leaf_recall: f64,
    pub fov_radius: f64,
    pub min_obs: u32,
    /// JSON detector profile replacing the built-in one.
    pub detector_profile: Option<String>,

    pub nav_enabled: bool,
    pub nav_start: [f64; 3],
    pub nav_goal: [f64; 3],
    pub nav_tol_xy: f64,
    pub nav_tol_yaw: f64,
    pub nav_max_ticks: u64,
    pub mcl_particles: usize,
    pub mcl_sigma_xy: f64,
    pub mcl_sigma_yaw: f64,
    pub kld_epsilon: f64,
    pub kld_delta: f64,
    pub kld_n_min: usize,
    pub kld_n_max: usize,

    /// Dump the localizer's particles every this many updates; 0 disables.
    pub particles_every: u64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        let dwa = DwaConfig::default();
        let kld = KldConfig::default();
        let det = profile_from_paper();
        MissionConfig {
            dt: 0.05,
            tick_budget: 120_000,
            start_pose: [1.0, 1.0, 0.0],
            lidar_every: 2,
            lidar_beams: 360,
            lidar_increment_deg: 1.0,
            lidar_range_max: 10.0,
            lidar_sigma: 0.01,
            odom_alphas: [0.01; 4],
            slam_particles: 30,
            slam_alphas: [0.02; 4],
            slam_resample_threshold: 0.5,
            slam_gate_dist: 0.1,
            slam_gate_yaw: 0.05,
            slam_prior_xy: 0.05,
            slam_prior_yaw: 0.03,
            slam_degeneracy_limit: 50,
            altitude: 2.0,
            pid_kp: 1.5,
            pid_ki: 0.2,
            pid_kd: 0.4,
            pid_i_max: 0.5,
            vz_max: 1.0,
            altitude_tau: 0.2,
            takeoff_tol: 0.05,
            takeoff_settle_ticks: 20,
            takeoff_max_ticks: 600,
            robot_radius: dwa.robot_radius,
            inflation_padding: 0.2,
            decay_radius: 1.0,
            v_max: dwa.v_max,
            omega_max: dwa.omega_max,
            accel_v: dwa.accel_v,
            accel_omega: dwa.accel_omega,
            dwa_horizon: dwa.horizon,
            dwa_dt_traj: dwa.dt_traj,
            dwa_n_v: dwa.n_v,
            dwa_n_omega: dwa.n_omega,
            dwa_w_heading: dwa.w_heading,
            dwa_w_clearance: dwa.w_clearance,
            dwa_w_velocity: dwa.w_velocity,
            dwa_safety_margin: dwa.safety_margin,
            dwa_lookahead: dwa.lookahead,
            replan_ticks: 10,
            stop_timeout_ticks: 100,
            goal_timeout_ticks: 2400,
            goal_tol_xy: 0.3,
            snap_tolerance: 2.0,
            frontier_min_cluster: 3,
            explore_w_dist: 1.0,
            explore_w_size: None,
            blacklist_radius: 0.5,
            blacklist_failures: 2,
            explore_max_ticks: 60_000,
            frontier_snapshots: true,
            survey_enabled: true,
            survey_lane_spacing: 1.5,
            survey_coverage_target: 0.95,
            survey_max_ticks: 40_000,
            survey_margin: 1.5,
            detector_rate: det.rate_hz,
            leaf_recall: det.leaf_recall,
            fov_radius: det.fov_radius,
            min_obs: 3,
            detector_profile: None,
            nav_enabled: true,
            nav_start: [1.0, 1.0, 0.0],
            nav_goal: [2.0, 2.0, 0.0],
            nav_tol_xy: 0.25,
            nav_tol_yaw: 0.2,
            nav_max_ticks: 6000,
            mcl_particles: 1000,
            mcl_sigma_xy: 0.2,
            mcl_sigma_yaw: 0.1,
            kld_epsilon: kld.epsilon,
            kld_delta: kld.delta,
            kld_n_min: kld.n_min,
            kld_n_max: kld.n_max,
            particles_every: 0,
        }
    }
}

fn parse_scalar(raw: &str) -> Value {
    if let Ok(b) = raw.parse::<bool>() {
        return Value::Bool(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return Value::from(i);
    }
    match raw.parse::<f64>() {
        Ok(f) if f.is_finite() => Value::from(f),
        _ => Value::String(raw.to_string()),
    }
}

fn pose3(p: [f64; 3]) -> Pose {
    Pose::new(p[0], p[1], p[2])
}

impl MissionConfig {
    /// Parses the `key = value` text. Unknown keys and ill-typed values
    /// are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Map::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, raw)) = line.split_once('=') else {
                return Err(Error::parse(n + 1, 1, "expected `key = value`"));
            };
            let (key, raw) = (key.trim(), raw.trim());
            let value = if raw.contains(',') {
                Value::Array(raw.split(',').map(|s| parse_scalar(s.trim())).collect())
            } else {
                parse_scalar(raw)
            };
            if map.insert(key.to_string(), value).is_some() {
                return Err(Error::parse(n + 1, 1, format!("duplicate key `{key}`")));
            }
        }
        let cfg: MissionConfig =
            serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("lidar_range_max", self.lidar_range_max),
            ("lidar_increment_deg", self.lidar_increment_deg),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("accel_v", self.accel_v),
            ("accel_omega", self.accel_omega),
            ("dwa_horizon", self.dwa_horizon),
            ("dwa_dt_traj", self.dwa_dt_traj),
            ("robot_radius", self.robot_radius),
            ("decay_radius", self.decay_radius),
            ("vz_max", self.vz_max),
            ("survey_lane_spacing", self.survey_lane_spacing),
            ("survey_margin", self.survey_margin),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.lidar_every == 0 || self.lidar_beams == 0 || self.slam_particles == 0 || self.mcl_particles == 0 {
            return Err(Error::Config("lidar_every, lidar_beams and particle counts must be nonzero".into()));
        }
        self.kld().validate().map_err(Error::Config)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn start(&self) -> Pose {
        pose3(self.start_pose)
    }

    pub fn nav_start(&self) -> Pose {
        pose3(self.nav_start)
    }

    pub fn nav_goal(&self) -> Pose {
        pose3(self.nav_goal)
    }

    pub fn lidar(&self) -> LidarConfig {
        LidarConfig {
            beams: self.lidar_beams,
            angle_increment: self.lidar_increment_deg.to_radians(),
            range_max: self.lidar_range_max,
            sigma: self.lidar_sigma,
        }
    }

    pub fn rbpf(&self) -> RbpfConfig {
        RbpfConfig {
            alphas: OdomAlphas(self.slam_alphas),
            resample_threshold: self.slam_resample_threshold,
            sensor: SensorModel::default(),
            matcher: MatchParams {
                prior: (self.slam_prior_xy > 0.0 && self.slam_prior_yaw > 0.0)
                    .then_some((self.slam_prior_xy, self.slam_prior_yaw)),
                ..MatchParams::default()
            },
            record_trajectory: false,
        }
    }

    pub fn inflation(&self, unknown_is_lethal: bool) -> InflationConfig {
        InflationConfig {
            robot_radius: self.robot_radius + self.inflation_padding,
            decay_radius: self.decay_radius,
            unknown_is_lethal,
        }
    }

    pub fn dwa(&self) -> DwaConfig {
        DwaConfig {
            v_max: self.v_max,
            allow_vy: false,
            omega_max: self.omega_max,
            accel_v: self.accel_v,
            accel_omega: self.accel_omega,
            horizon: self.dwa_horizon,
            dt_traj: self.dwa_dt_traj,
            n_v: self.dwa_n_v,
            n_omega: self.dwa_n_omega,
            w_heading: self.dwa_w_heading,
            w_clearance: self.dwa_w_clearance,
            w_velocity: self.dwa_w_velocity,
            robot_radius: self.robot_radius,
            safety_margin: self.dwa_safety_margin,
            control_dt: self.dt,
            lookahead: self.dwa_lookahead,
            clearance_cap: 1.0,
        }
    }

    pub fn goal_weights(&self, resolution: f64) -> GoalWeights {
        GoalWeights {
            w_dist: self.explore_w_dist,
            w_size: self.explore_w_size.unwrap_or(0.5 * resolution),
        }
    }

    pub fn kld(&self) -> KldConfig {
        KldConfig {
            epsilon: self.kld_epsilon,
            delta: self.kld_delta,
            n_min: self.kld_n_min,
            n_max: self.kld_n_max,
            ..KldConfig::default()
        }
    }

    /// The detector profile with this config's rate, recall and footprint.
    pub fn detector(&self, loaded: Option<DetectorProfile>) -> DetectorProfile {
        let base = loaded.unwrap_or_else(profile_from_paper);
        DetectorProfile {
            rate_hz: self.detector_rate,
            leaf_recall: self.leaf_recall,
            fov_radius: self.fov_radius,
            ..base
        }
    }
}
