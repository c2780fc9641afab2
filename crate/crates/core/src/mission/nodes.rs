//! The per-node state machines driven by the mission loop.

use crate::exploration::{exploration_done, find_frontiers, frontier_mask, select_goal, Blacklist, FrontierCluster, GoalWeights};
use crate::geometry::{normalize_angle, OdomDelta, Pose, Twist};
use crate::localization::MonteCarloLocalizer;
use crate::mapping::{rbpf_update, CellClass, OccupancyGrid, RbpfConfig, SlamParticle};
use crate::planning::{dwa_command, inflate, plan_to_nearest, Costmap, DwaCommand, DwaConfig, InflationConfig, Path};
use crate::raycast::GridGeometry;
use crate::simworld::LaserScan;
use rand_chacha::ChaCha8Rng;

/// Ties the map frame to the odometry frame: the localizer placed the
/// robot at `map` when odometry read `odom`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub map: Pose,
    pub odom: Pose,
}

impl Anchor {
    pub fn locate(&self, odom: &Pose) -> Pose {
        let mut p = self.map.compose(&odom.relative_to(&self.odom));
        p.z = odom.z;
        p
    }
}

fn moved_enough(last: &Pose, now: &Pose, dist: f64, yaw: f64) -> bool {
    last.distance(now) >= dist || normalize_angle(now.yaw - last.yaw).abs() >= yaw
}

pub struct SlamNode {
    pub particles: Vec<SlamParticle>,
    cfg: RbpfConfig,
    gate: (f64, f64),
    last_odom: Option<Pose>,
    best: usize,
    rng: ChaCha8Rng,
    pub updates: u64,
    pub resamples: u64,
    pub degenerate: u64,
    pub unknown_increases: u64,
    last_unknown: usize,
}

impl SlamNode {
    pub fn new(start: Pose, geometry: GridGeometry, n: usize, cfg: RbpfConfig, gate: (f64, f64), rng: ChaCha8Rng) -> Self {
        let map = OccupancyGrid::new(geometry, &cfg.sensor);
        SlamNode {
            particles: SlamParticle::initial_set(n, start, map),
            cfg,
            gate,
            last_odom: None,
            best: 0,
            rng,
            updates: 0,
            resamples: 0,
            degenerate: 0,
            unknown_increases: 0,
            last_unknown: geometry.len(),
        }
    }

    /// Runs a filter update for a scan whose `pose_stamp` is the odometry
    /// pose at acquisition, unless the robot has barely moved since the
    /// last update. The first scan always updates.
    pub fn process(&mut self, scan: &LaserScan) -> Option<Anchor> {
        let odom = scan.pose_stamp;
        let delta = match self.last_odom {
            Some(last) if !moved_enough(&last, &odom, self.gate.0, self.gate.1) => return None,
            Some(last) => OdomDelta::between(&last, &odom),
            None => OdomDelta::default(),
        };
        let stats = rbpf_update(&mut self.particles, &delta, scan, &self.cfg, &mut self.rng);
        self.last_odom = Some(odom);
        self.best = stats.best;
        self.updates += 1;
        self.resamples += stats.resampled as u64;
        self.degenerate += stats.degenerate as u64;
        let unknown = self.map().count_class(CellClass::Unknown);
        if unknown > self.last_unknown {
            self.unknown_increases += 1;
        }
        self.last_unknown = unknown;
        Some(Anchor {
            map: self.particles[self.best].pose,
            odom,
        })
    }

    pub fn map(&self) -> &OccupancyGrid {
        &self.particles[self.best].map
    }

    pub fn pose(&self) -> Pose {
        self.particles[self.best].pose
    }
}

pub struct MclNode {
    pub localizer: MonteCarloLocalizer,
    map: OccupancyGrid,
    gate: (f64, f64),
    last_odom: Pose,
    rng: ChaCha8Rng,
    pub updates: u64,
}

impl MclNode {
    pub fn new(localizer: MonteCarloLocalizer, map: OccupancyGrid, odom: Pose, gate: (f64, f64), rng: ChaCha8Rng) -> Self {
        MclNode {
            localizer,
            map,
            gate,
            last_odom: odom,
            rng,
            updates: 0,
        }
    }

    pub fn process(&mut self, scan: &LaserScan) -> Option<Anchor> {
        let odom = scan.pose_stamp;
        if !moved_enough(&self.last_odom, &odom, self.gate.0, self.gate.1) {
            return None;
        }
        let delta = OdomDelta::between(&self.last_odom, &odom);
        self.localizer.step(&delta, &self.map, scan, &mut self.rng);
        self.last_odom = odom;
        self.updates += 1;
        let (mean, _) = self.localizer.estimate();
        Some(Anchor { map: mean, odom })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalState {
    Idle,
    Active,
    Succeeded,
    Failed,
}

/// Tolerances attached to a goal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalSpec {
    pub pose: Pose,
    pub tol_xy: f64,
    /// `None` ignores the final heading.
    pub tol_yaw: Option<f64>,
}

/// Global A* plus the dynamic-window controller.
pub struct MoveBase {
    dwa: DwaConfig,
    inflation: InflationConfig,
    replan_ticks: u64,
    stop_timeout: u64,
    goal_timeout: u64,
    snap_tolerance: f64,
    goal: Option<GoalSpec>,
    pub state: GoalState,
    path: Option<Path>,
    costmap: Option<Costmap>,
    map: Option<OccupancyGrid>,
    map_fresh: bool,
    last_plan: u64,
    goal_since: u64,
    stopped_for: u64,
    obstacles: Vec<(f64, f64)>,
    vel: Twist,
    pub stops: u64,
}

impl MoveBase {
    pub fn new(dwa: DwaConfig, inflation: InflationConfig, replan_ticks: u64, stop_timeout: u64, goal_timeout: u64, snap_tolerance: f64) -> Self {
        MoveBase {
            dwa,
            inflation,
            replan_ticks,
            stop_timeout,
            goal_timeout,
            snap_tolerance,
            goal: None,
            state: GoalState::Idle,
            path: None,
            costmap: None,
            map: None,
            map_fresh: false,
            last_plan: 0,
            goal_since: 0,
            stopped_for: 0,
            obstacles: Vec::new(),
            vel: Twist::default(),
            stops: 0,
        }
    }

    pub fn set_goal(&mut self, goal: GoalSpec, tick: u64) {
        self.goal = Some(goal);
        self.state = GoalState::Active;
        self.path = None;
        self.goal_since = tick;
        self.stopped_for = 0;
    }

    pub fn cancel(&mut self) {
        self.goal = None;
        self.path = None;
        self.state = GoalState::Idle;
    }

    pub fn set_map(&mut self, map: OccupancyGrid) {
        self.map = Some(map);
        self.map_fresh = true;
    }

    /// Scan returns in the map frame, placed with the pose the robot had
    /// when the scan was taken.
    pub fn set_scan(&mut self, scan: &LaserScan, pose_at_scan: &Pose) {
        self.obstacles = scan.hit_points().map(|(bx, by)| pose_at_scan.transform_point(bx, by)).collect();
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_ref()
    }

    pub fn velocity(&self) -> Twist {
        self.vel
    }

    fn plan(&mut self, pose: &Pose, tick: u64) -> bool {
        let (Some(map), Some(goal)) = (&self.map, self.goal) else { return false };
        if self.map_fresh || self.costmap.is_none() {
            self.costmap = Some(inflate(map, &self.inflation));
            self.map_fresh = false;
        }
        let costmap = self.costmap.as_ref().unwrap();
        let g = costmap.geometry();
        let (Some(start), Some(target)) = (g.cell_of(pose.x, pose.y), g.cell_of(goal.pose.x, goal.pose.y)) else {
            return false;
        };
        self.last_plan = tick;
        match plan_to_nearest(costmap, start, target, self.snap_tolerance) {
            Ok(mut path) => {
                // End exactly at the requested pose when it is in the goal cell.
                if path.cells.last() == Some(&target) {
                    *path.points.last_mut().unwrap() = (goal.pose.x, goal.pose.y);
                }
                self.path = Some(path);
                true
            }
            Err(_) => {
                self.path = None;
                false
            }
        }
    }

    fn finish(&mut self, state: GoalState) -> Twist {
        self.state = state;
        self.path = None;
        self.vel = Twist::default();
        self.vel
    }

    /// Planar command for this tick.
    pub fn step(&mut self, pose: &Pose, tick: u64) -> Twist {
        if self.state != GoalState::Active {
            self.vel = Twist::default();
            return self.vel;
        }
        let goal = self.goal.unwrap();
        if tick - self.goal_since > self.goal_timeout {
            return self.finish(GoalState::Failed);
        }
        let end = self.path.as_ref().map(|p| p.goal()).unwrap_or((goal.pose.x, goal.pose.y));
        if (pose.x - end.0).hypot(pose.y - end.1) <= goal.tol_xy && self.path.is_some() {
            let yaw_err = normalize_angle(goal.pose.yaw - pose.yaw);
            match goal.tol_yaw {
                Some(tol) if yaw_err.abs() > tol => {
                    // Turn in place, within the angular acceleration limit.
                    let step = self.dwa.accel_omega * self.dwa.control_dt;
                    let want = (1.5 * yaw_err).clamp(-self.dwa.omega_max, self.dwa.omega_max);
                    let omega = want.clamp(self.vel.omega - step, self.vel.omega + step);
                    let v = (self.vel.vx - self.dwa.accel_v * self.dwa.control_dt).max(0.0);
                    self.vel = Twist::planar(v, if v > 0.0 { 0.0 } else { omega });
                    return self.vel;
                }
                _ => return self.finish(GoalState::Succeeded),
            }
        }
        let stale = self.map_fresh && tick - self.last_plan >= self.replan_ticks;
        if (self.path.is_none() || stale) && !self.plan(pose, tick) {
            return self.finish(GoalState::Failed);
        }
        let path = self.path.as_ref().unwrap();
        match dwa_command(pose, &self.vel, path, &self.obstacles, &self.dwa) {
            DwaCommand::Move(t) => {
                self.stopped_for = 0;
                self.vel = t;
            }
            DwaCommand::Stop => {
                self.stops += 1;
                self.stopped_for += 1;
                self.vel = Twist::default();
                if self.stopped_for > self.stop_timeout {
                    return self.finish(GoalState::Failed);
                }
            }
        }
        self.vel
    }
}

/// A goal handed to the move base by the explorer.
#[derive(Debug, Clone)]
pub struct ActiveFrontier {
    pub centroid: (f64, f64),
    pub cells: Vec<usize>,
    pub unknown_at_start: usize,
}

pub enum ExploreAction {
    NewGoal(Pose, Vec<FrontierCluster>),
    Done { unreachable: usize },
}

pub struct Explorer {
    pub min_cluster: usize,
    pub inflation: InflationConfig,
    pub weights: GoalWeights,
    pub blacklist: Blacklist,
    pub current: Option<ActiveFrontier>,
    pub selected: u64,
    pub succeeded: u64,
    pub failed: u64,
    pub no_progress: u64,
}

impl Explorer {
    pub fn new(min_cluster: usize, inflation: InflationConfig, weights: GoalWeights, blacklist: Blacklist) -> Self {
        Explorer {
            min_cluster,
            inflation,
            weights,
            blacklist,
            current: None,
            selected: 0,
            succeeded: 0,
            failed: 0,
            no_progress: 0,
        }
    }

    /// Closes the current leg. A leg that did not shrink the unknown area
    /// counts as a failure against its frontier.
    pub fn leg_finished(&mut self, state: GoalState, map: &OccupancyGrid) {
        let Some(cur) = self.current.take() else { return };
        let unknown = map.count_class(CellClass::Unknown);
        let progressed = unknown < cur.unknown_at_start;
        match state {
            GoalState::Succeeded => self.succeeded += 1,
            _ => self.failed += 1,
        }
        if !progressed {
            self.no_progress += 1;
        }
        if state != GoalState::Succeeded || !progressed {
            self.blacklist.record_failure(cur.centroid);
        }
    }

    /// True while the current goal's frontier still has frontier cells.
    pub fn goal_still_frontier(&self, map: &OccupancyGrid) -> bool {
        let Some(cur) = &self.current else { return false };
        let mask = frontier_mask(map);
        cur.cells.iter().any(|&i| mask[i])
    }

    pub fn abandon(&mut self) {
        self.current = None;
    }

    pub fn choose(&mut self, map: &OccupancyGrid, pose: &Pose) -> ExploreAction {
        if exploration_done(map, self.min_cluster, &self.blacklist) {
            return ExploreAction::Done { unreachable: 0 };
        }
        let mut clusters = find_frontiers(map, self.min_cluster);
        let costmap = inflate(map, &self.inflation);
        match select_goal(&mut clusters, pose, &costmap, self.weights, &self.blacklist) {
            Some(goal) => {
                let cells = clusters
                    .iter()
                    .find(|c| c.centroid == goal.centroid)
                    .map(|c| c.cells.clone())
                    .unwrap_or_default();
                self.current = Some(ActiveFrontier {
                    centroid: goal.centroid,
                    cells,
                    unknown_at_start: map.count_class(CellClass::Unknown),
                });
                self.selected += 1;
                ExploreAction::NewGoal(goal.pose, clusters)
            }
            None => ExploreAction::Done {
                unreachable: clusters.iter().filter(|c| !self.blacklist.contains(c.centroid)).count(),
            },
        }
    }
}

/// Lawnmower sweep over navigable known-free space: one run per maximal
/// stretch of consecutive lane samples, lanes alternating direction.
pub fn boustrophedon(costmap: &Costmap, reachable: &dyn Fn(usize) -> bool, spacing: f64) -> Vec<Vec<(f64, f64)>> {
    let g = *costmap.geometry();
    let mut out = Vec::new();
    let rows = (g.world_height() / spacing).floor() as usize;
    let cols = (g.world_width() / spacing).floor() as usize;
    for r in 0..rows {
        let y = g.origin_y + spacing * (r as f64 + 0.5);
        let mut lane: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut run = Vec::new();
        for c in 0..cols {
            let x = g.origin_x + spacing * (c as f64 + 0.5);
            let ok = g
                .cell_of(x, y)
                .is_some_and(|(ix, iy)| costmap.is_traversable(ix, iy) && reachable(g.index(ix, iy)));
            if ok {
                run.push((x, y));
            } else if !run.is_empty() {
                lane.push(std::mem::take(&mut run));
            }
        }
        if !run.is_empty() {
            lane.push(run);
        }
        if r % 2 == 1 {
            lane.reverse();
            for run in &mut lane {
                run.reverse();
            }
        }
        out.extend(lane);
    }
    out
}
