use super::bus::{Bus, Payload, SubscriberId, TfFrame};
use super::config::MissionConfig;
use super::nodes::{boustrophedon, Anchor, ExploreAction, Explorer, GoalSpec, GoalState, MclNode, MoveBase, SlamNode};
use super::pid::{pid_step, AltitudePlant, PidState};
use super::render::render_trajectory;
use super::report::*;
use crate::cropsense::{evaluate, observe, write_disease_csv, DetectionClock, DetectorProfile, DiseaseMap};
use crate::error::{Error, Result};
use crate::exploration::{write_frontiers_csv, Blacklist};
use crate::geometry::{normalize_angle, OdomDelta, Pose, Twist};
use crate::localization::{sample_delta, write_particles_csv, MonteCarloLocalizer, OdomAlphas};
use crate::mapping::{write_map_metadata, write_pgm, CellClass, MapMetadata, OccupancyGrid, SensorModel};
use crate::planning::{dijkstra, inflate, write_path_csv, Path};
use crate::raycast::GridRay;
use crate::simworld::{collision_check, simulate_scan, step_kinematics, CellKind, LaserScan, LidarConfig, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path as FsPath;
use std::sync::Arc;
use std::time::Instant;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_DEGENERACY: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

/// Frames a cell must spend in the camera footprint before the survey
/// treats it as covered.
const COVERED_FRAMES: u32 = 30;

/// Independent random streams, one per noise source.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Takeoff,
    Explore,
    Survey,
    Navigate,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Takeoff => "takeoff",
            Phase::Explore => "explore",
            Phase::Survey => "survey",
            Phase::Navigate => "navigate",
        }
    }
}

/// Files produced by a mission, keyed by file name.
#[derive(Debug, Clone, Default)]
pub struct MissionArtifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

impl MissionArtifacts {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct MissionOutcome {
    pub report: MissionReport,
    pub artifacts: MissionArtifacts,
    /// Wall-clock seconds per phase. Kept out of the report so that the
    /// report stays reproducible.
    pub wall_seconds: Vec<(String, f64)>,
    pub map: OccupancyGrid,
}

impl MissionOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }

    /// Writes every artifact plus `report.json` and `timing.json`.
    pub fn write_to(&self, dir: &FsPath) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.artifacts.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        std::fs::write(dir.join("report.json"), self.report.to_json())?;
        let timing: serde_json::Map<String, serde_json::Value> = self
            .wall_seconds
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::from(*v)))
            .collect();
        std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
        Ok(())
    }
}

/// Ground truth and the vehicle's own sensors.
struct Sim<'w> {
    world: &'w World,
    pose: Pose,
    plant: AltitudePlant,
    cmd: Twist,
    odom: Pose,
    odom_alphas: OdomAlphas,
    odom_rng: ChaCha8Rng,
    lidar: LidarConfig,
    lidar_rng: ChaCha8Rng,
    scan_seq: u64,
    /// Ground-truth beams that crossed or hit each cell.
    beam_counts: Vec<u16>,
    robot_radius: f64,
    collisions: u64,
    min_clearance: f64,
}

impl Sim<'_> {
    fn step(&mut self, dt: f64) {
        let before = self.pose;
        let planar = Twist { vz: 0.0, ..self.cmd };
        let mut next = step_kinematics(&self.pose, &planar, dt);
        self.plant.step(self.cmd.vz, dt);
        next.z = self.plant.z;
        self.pose = next;
        let delta = OdomDelta::between(&before, &next);
        let noisy = if delta.trans == 0.0 && delta.rot2 == 0.0 {
            delta
        } else {
            sample_delta(&delta, &self.odom_alphas, &mut self.odom_rng)
        };
        self.odom = noisy.apply(&self.odom);
        self.odom.z = self.plant.z;
    }

    /// Records a collision when the robot disc touches an obstacle.
    fn audit(&mut self) -> bool {
        let hit = collision_check(self.world, self.pose.x, self.pose.y, self.robot_radius);
        self.collisions += hit as u64;
        self.min_clearance = self.min_clearance.min(self.clearance());
        hit
    }

    /// Distance from the robot center to the nearest obstacle cell, minus the
    /// robot radius, searched within two meters.
    fn clearance(&self) -> f64 {
        let g = self.world.geometry();
        let reach = 2.0;
        let (Some((x0, y0)), Some((x1, y1))) = (
            g.cell_of((self.pose.x - reach).max(g.origin_x), (self.pose.y - reach).max(g.origin_y)),
            g.cell_of(
                (self.pose.x + reach).min(g.origin_x + g.world_width() - 1e-9),
                (self.pose.y + reach).min(g.origin_y + g.world_height() - 1e-9),
            ),
        ) else {
            return reach;
        };
        let mut best = reach;
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                if !self.world.is_obstacle(ix, iy) {
                    continue;
                }
                let lx = g.origin_x + ix as f64 * g.resolution;
                let ly = g.origin_y + iy as f64 * g.resolution;
                let dx = (lx - self.pose.x).max(0.0).max(self.pose.x - lx - g.resolution);
                let dy = (ly - self.pose.y).max(0.0).max(self.pose.y - ly - g.resolution);
                best = best.min(dx.hypot(dy));
            }
        }
        best - self.robot_radius
    }

    fn scan(&mut self) -> Option<crate::simworld::LaserScan> {
        let mut scan = simulate_scan(self.world, &self.pose, &self.lidar, self.scan_seq, &mut self.lidar_rng).ok()?;
        self.scan_seq += 1;
        let g = *self.world.geometry();
        for i in 0..self.lidar.beams {
            let angle = self.pose.yaw + scan.angle(i);
            for c in GridRay::new(g, self.pose.x, self.pose.y, angle, self.lidar.range_max) {
                let slot = &mut self.beam_counts[g.index(c.ix, c.iy)];
                *slot = slot.saturating_add(1);
                if self.world.is_obstacle(c.ix, c.iy) {
                    break;
                }
            }
        }
        scan.pose_stamp = self.odom;
        Some(scan)
    }
}

/// Latest odometry and localization as seen by one node.
#[derive(Default)]
struct TfListener {
    odom: Option<Pose>,
    anchor: Option<Anchor>,
}

impl TfListener {
    fn absorb(&mut self, bus: &mut Bus, sub: SubscriberId) {
        for m in bus.poll("tf", sub).expect("tf registered") {
            match m.payload {
                Payload::Tf(TfFrame::Odom(p)) => self.odom = Some(p),
                Payload::Tf(TfFrame::Map { map, odom }) => self.anchor = Some(Anchor { map, odom }),
                _ => unreachable!("tf carries Tf payloads"),
            }
        }
    }

    /// Map-frame pose; before any localization the two frames coincide.
    fn pose(&self) -> Option<Pose> {
        let odom = self.odom?;
        Some(match self.anchor {
            Some(a) => a.locate(&odom),
            None => odom,
        })
    }

    fn locate(&self, odom: &Pose) -> Pose {
        match self.anchor {
            Some(a) => a.locate(odom),
            None => *odom,
        }
    }
}

fn grid_points(path: &Path) -> Vec<[f64; 2]> {
    path.points.iter().map(|&(x, y)| [x, y]).collect()
}

fn validate_pose(world: &World, pose: &Pose, radius: f64, what: &str) -> Result<()> {
    if world.geometry().cell_of(pose.x, pose.y).is_none() {
        return Err(Error::Config(format!("{what} ({}, {}) lies outside the world", pose.x, pose.y)));
    }
    if collision_check(world, pose.x, pose.y, radius) {
        return Err(Error::Config(format!("{what} ({}, {}) overlaps an obstacle", pose.x, pose.y)));
    }
    Ok(())
}

/// Runs the whole mission: takeoff, exploration with SLAM, the survey
/// sweep and the point-to-point demonstration.
pub fn run_mission(cfg: &MissionConfig, world: &World, seed: u64, profile: Option<DetectorProfile>) -> Result<MissionOutcome> {
    cfg.validate()?;
    let start = cfg.start();
    validate_pose(world, &start, cfg.robot_radius, "start_pose")?;
    if cfg.nav_enabled {
        validate_pose(world, &cfg.nav_start(), cfg.robot_radius, "nav_start")?;
        validate_pose(world, &cfg.nav_goal(), cfg.robot_radius, "nav_goal")?;
    }
    let profile = cfg.detector(profile);
    profile.validate()?;
    Mission::new(cfg, world, seed, profile).run()
}

struct PhaseLog {
    phases: Vec<PhaseReport>,
    wall: Vec<(String, f64)>,
    ticks: u64,
    clock: Instant,
}

impl PhaseLog {
    fn new() -> Self {
        PhaseLog {
            phases: Vec::new(),
            wall: Vec::new(),
            ticks: 0,
            clock: Instant::now(),
        }
    }

    fn end(&mut self, phase: Phase, completed: bool) {
        self.phases.push(PhaseReport {
            name: phase.name().to_string(),
            ticks: self.ticks,
            completed,
        });
        self.wall.push((phase.name().to_string(), self.clock.elapsed().as_secs_f64()));
        self.ticks = 0;
        self.clock = Instant::now();
    }
}

struct Subs {
    sim_cmd: SubscriberId,
    loc_scan: SubscriberId,
    mb_goal: SubscriberId,
    mb_map: SubscriberId,
    mb_scan: SubscriberId,
    mb_tf: SubscriberId,
    plan_map: SubscriberId,
    plan_tf: SubscriberId,
    pid_tf: SubscriberId,
    fusion: SubscriberId,
}

struct Mission<'a> {
    cfg: &'a MissionConfig,
    world: &'a World,
    seed: u64,
    profile: DetectorProfile,
    bus: Bus,
    subs: Subs,
    sim: Sim<'a>,
    slam: SlamNode,
    mcl: Option<MclNode>,
    move_base: MoveBase,
    explorer: Explorer,
    pid: PidState,
    clock: DetectionClock,
    detect_rng: ChaCha8Rng,
    disease: DiseaseMap,
    mb_tf: TfListener,
    plan_tf: TfListener,
    pid_z: f64,
    planner_map: Option<OccupancyGrid>,
    planner_map_fresh: bool,
    goal_pending: bool,
    goal_spec: GoalSpec,
    mb_scan: Option<Arc<LaserScan>>,
    view_frames: Vec<u32>,
    crop_seen: Vec<bool>,
    detector_frames: u64,
    artifacts: MissionArtifacts,
    warnings: Vec<String>,
    trajectory: Vec<[f64; 2]>,
    tick: u64,
}

impl<'a> Mission<'a> {
    fn new(cfg: &'a MissionConfig, world: &'a World, seed: u64, profile: DetectorProfile) -> Self {
        let g = *world.geometry();
        let mut bus = Bus::with_standard_topics();
        let mut sub = |topic: &str, name: &str| bus.subscribe(topic, name).expect("standard topic");
        let subs = Subs {
            sim_cmd: sub("cmd_vel", "sim"),
            loc_scan: sub("scan", "localization"),
            mb_goal: sub("goal", "move_base"),
            mb_map: sub("map", "move_base"),
            mb_scan: sub("scan", "move_base"),
            mb_tf: sub("tf", "move_base"),
            plan_map: sub("map", "explore"),
            plan_tf: sub("tf", "explore"),
            pid_tf: sub("tf", "altitude"),
            fusion: sub("detections", "fusion"),
        };
        let start = cfg.start();
        let sim = Sim {
            world,
            pose: start,
            plant: AltitudePlant::new(cfg.altitude_tau),
            cmd: Twist::default(),
            odom: start,
            odom_alphas: OdomAlphas(cfg.odom_alphas),
            odom_rng: stream(seed, 1),
            lidar: cfg.lidar(),
            lidar_rng: stream(seed, 2),
            scan_seq: 0,
            beam_counts: vec![0; g.len()],
            robot_radius: cfg.robot_radius,
            collisions: 0,
            min_clearance: f64::INFINITY,
        };
        let slam = SlamNode::new(
            start,
            g,
            cfg.slam_particles,
            cfg.rbpf(),
            (cfg.slam_gate_dist, cfg.slam_gate_yaw),
            stream(seed, 3),
        );
        let move_base = MoveBase::new(
            cfg.dwa(),
            cfg.inflation(true),
            cfg.replan_ticks,
            cfg.stop_timeout_ticks,
            cfg.goal_timeout_ticks,
            cfg.snap_tolerance,
        );
        let explorer = Explorer::new(
            cfg.frontier_min_cluster,
            cfg.inflation(false),
            cfg.goal_weights(g.resolution),
            Blacklist::new(cfg.blacklist_radius, cfg.blacklist_failures),
        );
        Mission {
            cfg,
            world,
            seed,
            profile,
            bus,
            subs,
            sim,
            slam,
            mcl: None,
            move_base,
            explorer,
            pid: PidState {
                kp: cfg.pid_kp,
                ki: cfg.pid_ki,
                kd: cfg.pid_kd,
                i_max: cfg.pid_i_max,
                vz_max: cfg.vz_max,
                setpoint: cfg.altitude,
                ..PidState::default()
            },
            clock: DetectionClock::new(profile.rate_hz, cfg.dt),
            detect_rng: stream(seed, 4),
            disease: DiseaseMap::new(cfg.min_obs),
            mb_tf: TfListener::default(),
            plan_tf: TfListener::default(),
            pid_z: 0.0,
            planner_map: None,
            planner_map_fresh: false,
            goal_pending: false,
            goal_spec: GoalSpec {
                pose: start,
                tol_xy: cfg.goal_tol_xy,
                tol_yaw: None,
            },
            mb_scan: None,
            view_frames: vec![0; g.len()],
            crop_seen: vec![false; g.len()],
            detector_frames: 0,
            artifacts: MissionArtifacts::default(),
            warnings: Vec::new(),
            trajectory: Vec::new(),
            tick: 0,
        }
    }

    fn publish(&mut self, topic: &str, payload: Payload) {
        self.bus.publish(topic, payload).expect("standard topic and payload");
    }

    fn publish_goal(&mut self, spec: GoalSpec) {
        self.goal_spec = spec;
        self.goal_pending = true;
        self.publish("goal", Payload::Goal(spec.pose));
    }

    /// Vehicle, sensors and the localization node.
    fn sense_and_localize(&mut self, phase: Phase) {
        if let Some(m) = self.bus.latest("cmd_vel", self.subs.sim_cmd).unwrap() {
            let Payload::CmdVel(t) = m.payload else { unreachable!() };
            self.sim.cmd = t;
        }
        self.sim.step(self.cfg.dt);
        self.sim.audit();
        if self.tick.is_multiple_of(10) {
            self.trajectory.push([self.sim.pose.x, self.sim.pose.y]);
        }
        self.publish("tf", Payload::Tf(TfFrame::Odom(self.sim.odom)));
        if self.tick.is_multiple_of(self.cfg.lidar_every) {
            if let Some(scan) = self.sim.scan() {
                self.publish("scan", Payload::Scan(Arc::new(scan)));
            }
        }

        let scans = self.bus.poll("scan", self.subs.loc_scan).unwrap();
        for m in scans {
            let Payload::Scan(scan) = m.payload else { unreachable!() };
            match phase {
                Phase::Takeoff => {}
                Phase::Explore | Phase::Survey => {
                    if let Some(a) = self.slam.process(&scan) {
                        self.publish("tf", Payload::Tf(TfFrame::Map { map: a.map, odom: a.odom }));
                        let map = self.slam.map().clone();
                        self.publish("map", Payload::Map(map));
                    }
                }
                Phase::Navigate => {
                    let mcl = self.mcl.as_mut().expect("localizer initialized");
                    if let Some(a) = mcl.process(&scan) {
                        let n = mcl.updates;
                        if self.cfg.particles_every > 0 && n.is_multiple_of(self.cfg.particles_every) {
                            let mut csv = b"step,x,y,yaw,weight\n".to_vec();
                            write_particles_csv(&mut csv, n, &mcl.localizer.particles).expect("in-memory write");
                            self.artifacts.add(format!("particles_{n}.csv"), csv);
                        }
                        self.publish("tf", Payload::Tf(TfFrame::Map { map: a.map, odom: a.odom }));
                    }
                }
            }
        }
    }
}

impl Mission<'_> {
    /// Move base, altitude hold, camera and fusion.
    fn control_and_detect(&mut self) {
        self.mb_tf.absorb(&mut self.bus, self.subs.mb_tf);
        if let Some(m) = self.bus.latest("map", self.subs.mb_map).unwrap() {
            let Payload::Map(map) = m.payload else { unreachable!() };
            self.move_base.set_map(map);
        }
        if let Some(m) = self.bus.latest("scan", self.subs.mb_scan).unwrap() {
            let Payload::Scan(scan) = m.payload else { unreachable!() };
            self.mb_scan = Some(scan);
        }
        // Placed with the current anchor every tick, so a map correction
        // moves the obstacles together with the robot.
        if let Some(scan) = &self.mb_scan {
            let at = self.mb_tf.locate(&scan.pose_stamp);
            self.move_base.set_scan(scan, &at);
        }
        if let Some(m) = self.bus.latest("goal", self.subs.mb_goal).unwrap() {
            let Payload::Goal(pose) = m.payload else { unreachable!() };
            self.move_base.set_goal(GoalSpec { pose, ..self.goal_spec }, self.tick);
            self.goal_pending = false;
        }
        let planar = match self.mb_tf.pose() {
            Some(pose) => self.move_base.step(&pose, self.tick),
            None => Twist::default(),
        };

        for m in self.bus.poll("tf", self.subs.pid_tf).unwrap() {
            if let Payload::Tf(TfFrame::Odom(p)) = m.payload {
                self.pid_z = p.z;
            }
        }
        let vz = pid_step(&mut self.pid, self.pid_z, self.cfg.dt);
        self.publish("cmd_vel", Payload::CmdVel(Twist { vz, ..planar }));

        let frames = self.clock.frames_in_tick(self.tick);
        self.detector_frames += frames;
        let mut obs = Vec::new();
        for _ in 0..frames {
            obs.extend(observe(self.world, &self.sim.pose, &self.profile, self.tick, &mut self.detect_rng));
        }
        if let Some(pose) = self.mb_tf.pose() {
            self.mark_view(&pose, frames as u32);
        }
        self.publish("detections", Payload::Detections(Arc::new(obs)));
        for m in self.bus.poll("detections", self.subs.fusion).unwrap() {
            let Payload::Detections(d) = m.payload else { unreachable!() };
            for o in d.iter() {
                self.crop_seen[o.cell] = true;
            }
            self.disease.fuse(self.world, &d);
        }
    }

    /// Counts camera frames per cell around the estimated pose.
    fn mark_view(&mut self, pose: &Pose, frames: u32) {
        if frames == 0 {
            return;
        }
        let g = *self.world.geometry();
        let r = self.profile.fov_radius;
        let cells = (r / g.resolution).ceil() as i64 + 1;
        let Some((cx, cy)) = g.cell_of(pose.x, pose.y) else { return };
        for dy in -cells..=cells {
            for dx in -cells..=cells {
                let (ix, iy) = (cx as i64 + dx, cy as i64 + dy);
                if !g.in_bounds(ix, iy) {
                    continue;
                }
                let (x, y) = g.cell_center(ix as usize, iy as usize);
                if (x - pose.x).hypot(y - pose.y) <= r {
                    let i = g.index(ix as usize, iy as usize);
                    self.view_frames[i] = self.view_frames[i].saturating_add(frames);
                }
            }
        }
    }

    /// A lane sample still worth passing over: a known-free cell within
    /// the camera footprint has not been in view long enough, and crop has
    /// been detected nearby.
    fn needs_view(&self, map: &OccupancyGrid, x: f64, y: f64) -> bool {
        let g = *map.geometry();
        let r = 0.75 * self.profile.fov_radius;
        let reach = r + self.cfg.survey_margin;
        let cells = (reach / g.resolution).ceil() as i64;
        let Some((cx, cy)) = g.cell_of(x, y) else { return false };
        let (mut gap, mut crop) = (false, false);
        for dy in -cells..=cells {
            for dx in -cells..=cells {
                let (ix, iy) = (cx as i64 + dx, cy as i64 + dy);
                if !g.in_bounds(ix, iy) {
                    continue;
                }
                let (px, py) = g.cell_center(ix as usize, iy as usize);
                let i = g.index(ix as usize, iy as usize);
                let d = (px - x).hypot(py - y);
                crop |= d <= reach && self.crop_seen[i];
                gap |= d <= r && map.class_of(i) == CellClass::Free && self.view_frames[i] < COVERED_FRAMES;
                if gap && crop {
                    return true;
                }
            }
        }
        false
    }

    /// Trims a run to the stretch between its first and last samples that
    /// still need a look.
    fn trim_run(&self, map: &OccupancyGrid, run: &[(f64, f64)]) -> Option<((f64, f64), (f64, f64))> {
        let first = run.iter().position(|&(x, y)| self.needs_view(map, x, y))?;
        let last = run.iter().rposition(|&(x, y)| self.needs_view(map, x, y))?;
        Some((run[first], run[last]))
    }

    fn absorb_planner_inputs(&mut self) {
        self.plan_tf.absorb(&mut self.bus, self.subs.plan_tf);
        self.planner_map_fresh = false;
        if let Some(m) = self.bus.latest("map", self.subs.plan_map).unwrap() {
            let Payload::Map(map) = m.payload else { unreachable!() };
            self.planner_map = Some(map);
            self.planner_map_fresh = true;
        }
    }

    /// Goal status as seen by a planner node, `None` while a freshly
    /// published goal has not reached the move base.
    fn goal_status(&self) -> Option<GoalState> {
        (!self.goal_pending).then_some(self.move_base.state)
    }

    fn ground_truth_coverage(&self, map: &OccupancyGrid) -> (u64, u64) {
        let reachable = self.world.reachable_from(self.cfg.start_pose[0], self.cfg.start_pose[1]);
        let mut total = 0;
        let mut classified = 0;
        for (i, &r) in reachable.iter().enumerate() {
            if r {
                total += 1;
                classified += (map.class_of(i) != CellClass::Unknown) as u64;
            }
        }
        (total, classified)
    }

    fn map_fidelity(&self, map: &OccupancyGrid) -> MapFidelity {
        let mut f = MapFidelity::default();
        for (i, &n) in self.sim.beam_counts.iter().enumerate() {
            if n < 3 {
                continue;
            }
            f.observed_cells += 1;
            let truth = if self.world.cells()[i] == CellKind::Obstacle {
                CellClass::Occupied
            } else {
                CellClass::Free
            };
            f.correct_cells += (map.class_of(i) == truth) as u64;
        }
        f.fraction = if f.observed_cells > 0 {
            f.correct_cells as f64 / f.observed_cells as f64
        } else {
            0.0
        };
        f
    }

    fn run(mut self) -> Result<MissionOutcome> {
        let cfg = self.cfg;
        let mut phase = Phase::Takeoff;
        let mut log = PhaseLog::new();
        let mut exit = EXIT_SUCCESS;
        let mut status = "success".to_string();
        let mut settled = 0u64;
        let mut exploration = ExplorationReport::default();
        let mut frontier_n = 0u64;
        let mut survey = SurveyReport {
            enabled: cfg.survey_enabled,
            ..SurveyReport::default()
        };
        let mut lanes: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut runs: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut waypoints: Vec<(f64, f64)> = Vec::new();
        let mut waypoint_active = false;
        let mut nav: Option<NavigationReport> = None;
        let mut nav_leg = 0u8;
        let mut nav_collision_base = 0u64;
        let mut frozen_map: Option<OccupancyGrid> = None;
        let mut fidelity = MapFidelity::default();
        let mut done = false;

        while !done {
            if self.tick >= cfg.tick_budget {
                log.end(phase, false);
                exit = EXIT_BUDGET;
                status = "budget_exhausted".into();
                self.warnings.push(format!("tick budget of {} exhausted during {}", cfg.tick_budget, phase.name()));
                break;
            }
            self.sense_and_localize(phase);
            if self.slam.degenerate > cfg.slam_degeneracy_limit {
                log.end(phase, false);
                exit = EXIT_DEGENERACY;
                status = "slam_degeneracy".into();
                self.warnings.push(format!("{} degenerate SLAM updates", self.slam.degenerate));
                break;
            }
            self.absorb_planner_inputs();
            let pose = self.plan_tf.pose();

            let mut next: Option<Phase> = None;
            let mut failed_phase = false;
            match phase {
                Phase::Takeoff => {
                    settled = if (self.pid_z - cfg.altitude).abs() <= cfg.takeoff_tol { settled + 1 } else { 0 };
                    if settled >= cfg.takeoff_settle_ticks {
                        next = Some(Phase::Explore);
                    } else if log.ticks >= cfg.takeoff_max_ticks {
                        failed_phase = true;
                    }
                }
                Phase::Explore => {
                    if let (Some(map), Some(pose)) = (self.planner_map.clone(), pose) {
                        let mut choose = false;
                        match self.goal_status() {
                            None => {}
                            Some(GoalState::Idle) => choose = true,
                            Some(GoalState::Active) => {
                                if self.planner_map_fresh && !self.explorer.goal_still_frontier(&map) {
                                    self.explorer.abandon();
                                    choose = true;
                                }
                            }
                            Some(state) => {
                                self.explorer.leg_finished(state, &map);
                                self.move_base.cancel();
                                choose = true;
                            }
                        }
                        if choose {
                            match self.explorer.choose(&map, &pose) {
                                ExploreAction::NewGoal(goal, clusters) => {
                                    self.publish_goal(GoalSpec {
                                        pose: goal,
                                        tol_xy: cfg.goal_tol_xy,
                                        tol_yaw: None,
                                    });
                                    if cfg.frontier_snapshots {
                                        let mut csv = Vec::new();
                                        write_frontiers_csv(&mut csv, &map, &clusters).expect("in-memory write");
                                        self.artifacts.add(format!("frontiers_{frontier_n}.csv"), csv);
                                        frontier_n += 1;
                                    }
                                    self.publish("frontiers", Payload::Frontiers(Arc::new(clusters)));
                                }
                                ExploreAction::Done { unreachable } => {
                                    if unreachable > 0 {
                                        self.warnings.push(format!("{unreachable} frontier clusters left unreachable"));
                                    }
                                    if !self.explorer.blacklist.is_empty() {
                                        self.warnings.push(format!(
                                            "exploration finished with {} blacklisted frontiers",
                                            self.explorer.blacklist.len()
                                        ));
                                    }
                                    self.move_base.cancel();
                                    exploration.done = true;
                                    let (total, classified) = self.ground_truth_coverage(self.slam.map());
                                    exploration.reachable_cells = total;
                                    exploration.classified_reachable_cells = classified;
                                    exploration.coverage_pct = 100.0 * classified as f64 / total.max(1) as f64;
                                    next = Some(if cfg.survey_enabled {
                                        Phase::Survey
                                    } else if cfg.nav_enabled {
                                        Phase::Navigate
                                    } else {
                                        done = true;
                                        Phase::Explore
                                    });
                                }
                            }
                        }
                    }
                    if next.is_none() && log.ticks >= cfg.explore_max_ticks {
                        failed_phase = true;
                    }
                }
                Phase::Survey => {
                    let (Some(map), Some(pose)) = (self.planner_map.clone(), pose) else {
                        unreachable!("survey starts after mapping")
                    };
                    if log.ticks == 0 {
                        let costmap = inflate(&map, &cfg.inflation(true));
                        let g = *costmap.geometry();
                        let field = g.cell_of(pose.x, pose.y).map(|c| dijkstra(&costmap, c));
                        let reach = |i: usize| field.as_ref().is_some_and(|f| f.reachable(i));
                        lanes = boustrophedon(&costmap, &reach, cfg.survey_lane_spacing);
                    }
                    if waypoint_active {
                        match self.goal_status() {
                            Some(GoalState::Succeeded) => {
                                survey.reached += 1;
                                waypoint_active = false;
                            }
                            Some(GoalState::Failed) => {
                                survey.failed += 1;
                                waypoint_active = false;
                            }
                            _ => {}
                        }
                    }
                    let covered = log.ticks.is_multiple_of(20)
                        && evaluate(&self.disease, self.world).coverage >= cfg.survey_coverage_target;
                    if covered {
                        survey.coverage_reached = true;
                    }
                    if !waypoint_active && !covered && waypoints.is_empty() {
                        // Next lane stretch; a fresh pass starts once the
                        // queue is spent, and stops when nothing needs a look.
                        let mut fresh = false;
                        loop {
                            if runs.is_empty() {
                                if fresh {
                                    break;
                                }
                                fresh = true;
                                survey.passes += 1;
                                runs = lanes.iter().rev().cloned().collect();
                            }
                            let Some(run) = runs.pop() else { break };
                            if let Some((a, b)) = self.trim_run(&map, &run) {
                                waypoints.push(b);
                                if a != b {
                                    waypoints.push(a);
                                }
                                break;
                            }
                        }
                    }
                    if !waypoint_active && !covered {
                        if let Some((x, y)) = waypoints.pop() {
                            let yaw = match waypoints.last() {
                                Some(&(nx, ny)) => (ny - y).atan2(nx - x),
                                None => (y - pose.y).atan2(x - pose.x),
                            };
                            self.publish_goal(GoalSpec {
                                pose: Pose::new(x, y, yaw),
                                tol_xy: cfg.goal_tol_xy,
                                tol_yaw: None,
                            });
                            survey.waypoints += 1;
                            waypoint_active = true;
                        }
                    }
                    if covered || (!waypoint_active && waypoints.is_empty()) || log.ticks >= cfg.survey_max_ticks {
                        self.move_base.cancel();
                        if cfg.nav_enabled {
                            next = Some(Phase::Navigate);
                        } else {
                            done = true;
                        }
                    }
                }
                Phase::Navigate => {
                    let report = nav.as_mut().expect("navigation initialized");
                    report.ticks += 1;
                    if nav_leg == 2 && report.planned_path.is_empty() {
                        if let Some(p) = self.move_base.path() {
                            report.planned_path = grid_points(p);
                        }
                    }
                    match self.goal_status() {
                        Some(GoalState::Succeeded) | Some(GoalState::Failed) if nav_leg == 1 => {
                            report.reached_start = self.move_base.state == GoalState::Succeeded;
                            nav_leg = 2;
                            self.publish_goal(GoalSpec {
                                pose: cfg.nav_goal(),
                                tol_xy: cfg.nav_tol_xy,
                                tol_yaw: Some(cfg.nav_tol_yaw),
                            });
                        }
                        Some(GoalState::Succeeded) | Some(GoalState::Failed) if nav_leg == 2 => {
                            let goal = cfg.nav_goal();
                            let truth = self.sim.pose;
                            report.final_error_xy = truth.distance(&goal);
                            report.final_error_yaw = normalize_angle(truth.yaw - goal.yaw).abs();
                            report.reached = self.move_base.state == GoalState::Succeeded
                                && report.final_error_xy <= cfg.nav_tol_xy
                                && report.final_error_yaw <= cfg.nav_tol_yaw;
                            if !report.reached {
                                // Not one of the abnormal-termination exit codes:
                                // the run finished, the report says how.
                                status = "navigation_failed".into();
                                self.warnings.push("navigation goal not reached".into());
                            }
                            done = true;
                        }
                        _ => {}
                    }
                    if !done && log.ticks >= cfg.nav_max_ticks {
                        failed_phase = true;
                    }
                }
            }

            self.control_and_detect();
            self.bus.advance();
            self.tick += 1;
            log.ticks += 1;
            if phase == Phase::Navigate {
                if let Some(r) = nav.as_mut() {
                    r.collisions = self.sim.collisions - nav_collision_base;
                }
            }

            if failed_phase {
                log.end(phase, false);
                exit = EXIT_BUDGET;
                status = "budget_exhausted".into();
                self.warnings.push(format!("{} phase budget exhausted", phase.name()));
                break;
            }
            if done {
                log.end(phase, true);
                break;
            }
            if let Some(np) = next {
                log.end(phase, true);
                if np == Phase::Navigate {
                    let map = self.slam.map().clone();
                    fidelity = self.map_fidelity(&map);
                    let pose = self.plan_tf.pose().unwrap_or(self.sim.odom);
                    let mut rng = stream(self.seed, 5);
                    let loc = MonteCarloLocalizer::around(
                        &pose,
                        cfg.mcl_particles,
                        cfg.mcl_sigma_xy,
                        cfg.mcl_sigma_yaw,
                        cfg.kld(),
                        OdomAlphas(cfg.slam_alphas),
                        SensorModel::default(),
                        &mut rng,
                    );
                    self.mcl = Some(MclNode::new(loc, map.clone(), self.sim.odom, (cfg.slam_gate_dist, cfg.slam_gate_yaw), rng));
                    self.move_base.set_map(map.clone());
                    frozen_map = Some(map);
                    nav_collision_base = self.sim.collisions;
                    nav = Some(NavigationReport {
                        start: cfg.nav_start,
                        goal: cfg.nav_goal,
                        ..NavigationReport::default()
                    });
                    nav_leg = 1;
                    self.publish_goal(GoalSpec {
                        pose: cfg.nav_start(),
                        tol_xy: cfg.nav_tol_xy,
                        tol_yaw: Some(cfg.nav_tol_yaw),
                    });
                }
                phase = np;
            }
        }

        let final_map = frozen_map.unwrap_or_else(|| self.slam.map().clone());
        if phase != Phase::Navigate && phase != Phase::Takeoff {
            fidelity = self.map_fidelity(&final_map);
        }
        if !exploration.done && exploration.reachable_cells == 0 {
            let (total, classified) = self.ground_truth_coverage(&final_map);
            exploration.reachable_cells = total;
            exploration.classified_reachable_cells = classified;
            exploration.coverage_pct = 100.0 * classified as f64 / total.max(1) as f64;
        }
        exploration.goals_selected = self.explorer.selected;
        exploration.goals_succeeded = self.explorer.succeeded;
        exploration.goals_failed = self.explorer.failed;
        exploration.blacklisted = self.explorer.blacklist.len() as u64;
        exploration.legs_without_progress = self.explorer.no_progress;
        exploration.unknown_increases = self.slam.unknown_increases;
        exploration.frontier_snapshots = frontier_n;

        if let (Some(r), Some(mcl)) = (nav.as_mut(), self.mcl.as_ref()) {
            r.localization_updates = mcl.updates;
            r.localization_degeneracies = mcl.localizer.degeneracies;
            r.final_particles = mcl.localizer.particles.len();
        }

        let slam_pose = self.slam.pose();
        let truth = self.sim.pose;
        let slam_report = SlamReport {
            particles: cfg.slam_particles,
            updates: self.slam.updates,
            resamples: self.slam.resamples,
            degenerate_updates: self.slam.degenerate,
            final_position_error: if phase == Phase::Navigate { 0.0 } else { slam_pose.distance(&truth) },
            final_yaw_error: if phase == Phase::Navigate { 0.0 } else { normalize_angle(slam_pose.yaw - truth.yaw).abs() },
        };

        let meta = MapMetadata::of(&final_map, &SensorModel::default());
        self.artifacts.add("map.pgm", write_pgm(&final_map));
        self.artifacts.add("map.yaml", write_map_metadata(&meta, "map.pgm").into_bytes());
        let planned = nav.as_ref().map(|n| n.planned_path.clone()).unwrap_or_default();
        let endpoints: Vec<[f64; 2]> = if cfg.nav_enabled {
            vec![[cfg.nav_start[0], cfg.nav_start[1]], [cfg.nav_goal[0], cfg.nav_goal[1]]]
        } else {
            Vec::new()
        };
        self.artifacts.add("trajectory.ppm", render_trajectory(&final_map, &self.trajectory, &planned, &endpoints));
        if !planned.is_empty() {
            let path = Path {
                cells: Vec::new(),
                points: planned.iter().map(|p| (p[0], p[1])).collect(),
                cost_units: 0,
                total_cost: 0.0,
            };
            let mut csv = Vec::new();
            write_path_csv(&mut csv, &path).expect("in-memory write");
            self.artifacts.add("nav_path.csv", csv);
        }
        let mut csv = Vec::new();
        write_disease_csv(&mut csv, &self.disease, self.world).expect("in-memory write");
        self.artifacts.add("disease.csv", csv);

        let g = self.world.geometry();
        let report = MissionReport {
            seed: self.seed,
            config_hash: cfg.hash(),
            world_width: g.width,
            world_height: g.height,
            resolution: g.resolution,
            exit_code: exit,
            status,
            warnings: self.warnings,
            total_ticks: self.tick,
            detector_frames: self.detector_frames,
            phases: log.phases,
            exploration,
            map_fidelity: fidelity,
            slam: slam_report,
            safety: SafetyReport {
                collisions: self.sim.collisions,
                min_clearance: self.sim.min_clearance,
                dwa_stops: self.move_base.stops,
            },
            survey,
            disease: evaluate(&self.disease, self.world),
            navigation: nav,
            trajectory: self.trajectory,
        };
        Ok(MissionOutcome {
            report,
            artifacts: self.artifacts,
            wall_seconds: log.wall,
            map: final_map,
        })
    }
}
