//! Fixtures shared by the integration suites.
#![allow(dead_code)]

use fieldnav::mapping::{CellClass, OccupancyGrid, SensorModel};
use fieldnav::raycast::GridGeometry;
use fieldnav::simworld::{load_world, CellKind, World};
use rand::Rng;

pub fn bundled_world(name: &str) -> World {
    let path = format!("{}/worlds/{name}.world", env!("CARGO_MANIFEST_DIR"));
    load_world(&std::fs::read_to_string(path).expect("bundled world")).expect("valid world")
}

pub fn bundled_config(name: &str) -> String {
    let path = format!("{}/configs/{name}.conf", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("bundled config")
}

/// Walled box with random interior obstacles at the given density.
pub fn random_world<R: Rng>(w: usize, h: usize, res: f64, density: f64, rng: &mut R) -> World {
    let g = GridGeometry::new(w, h, res, 0.0, 0.0);
    let cells = (0..w * h)
        .map(|i| {
            let (ix, iy) = g.coords(i);
            if ix == 0 || iy == 0 || ix == w - 1 || iy == h - 1 || rng.random::<f64>() < density {
                CellKind::Obstacle
            } else {
                CellKind::Free
            }
        })
        .collect();
    World::new(g, cells).unwrap()
}

/// Occupancy grid that knows the world exactly.
pub fn truth_grid(world: &World, model: &SensorModel) -> OccupancyGrid {
    let g = *world.geometry();
    let classes: Vec<CellClass> = (0..g.len())
        .map(|i| {
            let (ix, iy) = g.coords(i);
            if world.is_obstacle(ix, iy) {
                CellClass::Occupied
            } else {
                CellClass::Free
            }
        })
        .collect();
    OccupancyGrid::from_classes(g, model, &classes)
}

/// Random three-class grid for frontier and costmap oracles.
pub fn random_classes<R: Rng>(n: usize, p_occ: f64, p_unknown: f64, rng: &mut R) -> Vec<CellClass> {
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>();
            if u < p_occ {
                CellClass::Occupied
            } else if u < p_occ + p_unknown {
                CellClass::Unknown
            } else {
                CellClass::Free
            }
        })
        .collect()
}

pub struct Condensation {
    pub trace_before: f64,
    pub trace_after: f64,
    pub error: f64,
    pub min_count: usize,
    pub max_count: usize,
}

/// Corridor run: 1000 particles at σ 1 m / 0.5 rad around the true start,
/// then 30 motion/measurement/resample steps down the corridor.
pub fn condensation(world: &World, seed: u64) -> Condensation {
    use fieldnav::localization::{KldConfig, MonteCarloLocalizer, OdomAlphas};
    use fieldnav::simworld::{simulate_scan, LidarConfig};
    use fieldnav::{OdomDelta, Pose};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let model = SensorModel::default();
    let map = truth_grid(world, &model);
    let lidar = LidarConfig::default();
    let mut lidar_rng = ChaCha8Rng::seed_from_u64(seed);
    lidar_rng.set_stream(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(5);

    let mut truth = Pose::new(3.0, 2.5, 0.0);
    let mut mcl = MonteCarloLocalizer::around(
        &truth,
        1000,
        1.0,
        0.5,
        KldConfig::default(),
        OdomAlphas::default(),
        model,
        &mut rng,
    );
    let (_, c0) = mcl.estimate();
    let (mut lo, mut hi) = (usize::MAX, 0);
    for k in 0..30u64 {
        // gentle weave so the heading is exercised too
        let yaw = 0.15 * (k as f64 * 0.7).sin();
        let next = Pose::new(truth.x + 0.6, 2.5 + 0.4 * (k as f64 * 0.5).sin(), yaw);
        let delta = OdomDelta::between(&truth, &next);
        truth = next;
        let scan = simulate_scan(world, &truth, &lidar, k, &mut lidar_rng).expect("scan in corridor");
        mcl.step(&delta, &map, &scan, &mut rng);
        lo = lo.min(mcl.particles.len());
        hi = hi.max(mcl.particles.len());
    }
    let (mean, c1) = mcl.estimate();
    Condensation {
        trace_before: c0[0][0] + c0[1][1],
        trace_after: c1[0][0] + c1[1][1],
        error: mean.distance(&truth),
        min_count: lo,
        max_count: hi,
    }
}

/// Textbook Dijkstra over the 8-connected traversable cells (cost < 254),
/// no corner cutting, step cost (1 or √2)·(1 + c/128) in units of 2^-30.
pub fn oracle_dijkstra(costs: &[u8], w: usize, h: usize, start: usize) -> Vec<u64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let open = |x: i64, y: i64| x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && costs[y as usize * w + x as usize] < 254;
    let mut dist = vec![u64::MAX; w * h];
    dist[start] = 0;
    let mut heap = BinaryHeap::from([Reverse((0u64, start))]);
    while let Some(Reverse((d, i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (nx, ny) = (x + dx, y + dy);
            if !open(nx, ny) {
                continue;
            }
            let diag = dx != 0 && dy != 0;
            if diag && !(open(nx, y) && open(x, ny)) {
                continue;
            }
            let n = ny as usize * w + nx as usize;
            let c = 128 + costs[n] as u64;
            let step = if diag {
                (c as f64 * std::f64::consts::SQRT_2 * 8_388_608.0).round() as u64
            } else {
                c * 8_388_608
            };
            if d + step < dist[n] {
                dist[n] = d + step;
                heap.push(Reverse((d + step, n)));
            }
        }
    }
    dist
}

/// Distance from every cell to the nearest source by scanning all sources.
pub fn brute_force_distance(w: usize, h: usize, sources: &[bool]) -> Vec<f64> {
    let src: Vec<(i64, i64)> = (0..w * h).filter(|&i| sources[i]).map(|i| ((i % w) as i64, (i / w) as i64)).collect();
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            src.iter()
                .map(|&(sx, sy)| (((sx - x).pow(2) + (sy - y).pow(2)) as f64).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Random costmap: lethal cells at the given density, the rest decaying
/// away from them with a random decay radius.
pub fn random_costmap<R: Rng>(w: usize, h: usize, p_lethal: f64, rng: &mut R) -> fieldnav::planning::Costmap {
    use fieldnav::planning::{inflate, InflationConfig};
    let classes: Vec<CellClass> = (0..w * h)
        .map(|_| if rng.random::<f64>() < p_lethal { CellClass::Occupied } else { CellClass::Free })
        .collect();
    let g = GridGeometry::new(w, h, 0.25, 0.0, 0.0);
    let grid = OccupancyGrid::from_classes(g, &SensorModel::default(), &classes);
    let cfg = InflationConfig {
        robot_radius: 0.0,
        decay_radius: rng.random_range(0.25..2.0),
        unknown_is_lethal: true,
    };
    inflate(&grid, &cfg)
}

pub struct DwaScenario {
    pub world: World,
    pub pose: fieldnav::Pose,
    pub vel: fieldnav::Twist,
    pub path: fieldnav::planning::Path,
    pub obstacles: Vec<(f64, f64)>,
}

/// A cluttered box, a collision-free pose with some initial velocity, a
/// straight path to a random goal and the scan endpoints as obstacles.
pub fn dwa_scenario<R: Rng>(radius: f64, rng: &mut R) -> DwaScenario {
    use fieldnav::planning::Path;
    use fieldnav::simworld::{collision_check, simulate_scan, LidarConfig};
    use fieldnav::{Pose, Twist};
    loop {
        let world = random_world(24, 24, 0.25, 0.08, rng);
        let (x, y) = (rng.random_range(0.5..5.5), rng.random_range(0.5..5.5));
        if collision_check(&world, x, y, radius) {
            continue;
        }
        let pose = Pose::new(x, y, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let vel = Twist::planar(rng.random_range(0.0..0.5), rng.random_range(-1.0..1.0));
        let goal = (rng.random_range(0.5..5.5), rng.random_range(0.5..5.5));
        let n = 20;
        let points: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                (x + t * (goal.0 - x), y + t * (goal.1 - y))
            })
            .collect();
        let path = Path {
            cells: vec![(0, 0); points.len()],
            points,
            cost_units: 0,
            total_cost: 0.0,
        };
        let scan = simulate_scan(&world, &pose, &LidarConfig::default(), 0, rng).expect("free pose");
        let obstacles = scan.hit_points().map(|(bx, by)| pose.transform_point(bx, by)).collect();
        return DwaScenario {
            world,
            pose,
            vel,
            path,
            obstacles,
        };
    }
}

/// True when holding the command for one period and braking keeps the
/// footprint clear of every obstacle cell.
pub fn dwa_step_is_safe(s: &DwaScenario, cfg: &fieldnav::planning::DwaConfig) -> (bool, bool) {
    use fieldnav::planning::{brake_rollout, dwa_command, is_admissible, DwaCommand};
    use fieldnav::simworld::collision_check;
    match dwa_command(&s.pose, &s.vel, &s.path, &s.obstacles, cfg) {
        DwaCommand::Stop => (true, !collision_check(&s.world, s.pose.x, s.pose.y, cfg.robot_radius)),
        DwaCommand::Move(t) => {
            let (dist, _) = fieldnav::planning::free_arc_length(&s.pose, t.vx, t.omega, &s.obstacles, cfg);
            let admissible = is_admissible(t.vx, dist, cfg);
            let clear = brake_rollout(&s.pose, t.vx, t.omega, cfg, 0.005)
                .iter()
                .all(|p| !collision_check(&s.world, p.x, p.y, cfg.robot_radius));
            (admissible, clear)
        }
    }
}
