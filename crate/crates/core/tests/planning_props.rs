mod common;

use fieldnav::mapping::{CellClass, OccupancyGrid, SensorModel};
use fieldnav::planning::*;
use fieldnav::raycast::GridGeometry;
use fieldnav::Pose;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn traversable_cells(c: &Costmap) -> Vec<usize> {
    (0..c.costs().len()).filter(|&i| c.costs()[i] < INSCRIBED).collect()
}

fn check_path(c: &Costmap, p: &Path, start: (usize, usize), goal: (usize, usize)) {
    assert_eq!(p.cells.first(), Some(&start));
    assert_eq!(p.cells.last(), Some(&goal));
    for w in p.cells.windows(2) {
        let (a, b) = (w[0], w[1]);
        assert!(a != b && a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1, "{a:?} -> {b:?}");
    }
    assert!(p.cells.iter().all(|&(x, y)| c.cost(x, y) < INSCRIBED));
    let sum: u64 = p
        .cells
        .windows(2)
        .map(|w| step_cost_units(w[0].0 != w[1].0 && w[0].1 != w[1].1, c.cost(w[1].0, w[1].1)))
        .sum();
    assert_eq!(sum, p.cost_units);
}

#[test]
fn astar_matches_the_dijkstra_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut solved = 0;
    for _ in 0..100 {
        let c = common::random_costmap(50, 50, 0.2, &mut rng);
        let open = traversable_cells(&c);
        let s = open[rng.random_range(0..open.len())];
        let t = open[rng.random_range(0..open.len())];
        let g = *c.geometry();
        let oracle = common::oracle_dijkstra(c.costs(), 50, 50, s);
        match plan_astar(&c, g.coords(s), g.coords(t)) {
            Ok(p) => {
                assert_eq!(p.cost_units, oracle[t]);
                check_path(&c, &p, g.coords(s), g.coords(t));
                solved += 1;
            }
            Err(_) => assert_eq!(oracle[t], u64::MAX),
        }
    }
    assert!(solved > 20, "{solved}");
}

#[test]
fn library_dijkstra_agrees_with_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let c = common::random_costmap(30, 30, 0.2, &mut rng);
        let open = traversable_cells(&c);
        let s = open[rng.random_range(0..open.len())];
        let field = dijkstra(&c, c.geometry().coords(s));
        assert_eq!(field.cost, common::oracle_dijkstra(c.costs(), 30, 30, s));
    }
}

#[test]
fn empty_map_diagonal_cost() {
    let c = Costmap::from_costs(GridGeometry::new(10, 10, 0.25, 0.0, 0.0), vec![0; 100]);
    let p = plan_astar(&c, (0, 0), (9, 9)).unwrap();
    assert!((p.total_cost - 9.0 * std::f64::consts::SQRT_2).abs() < 1e-8);
    assert_eq!(p.len(), 10);
}

#[test]
fn inflate_matches_brute_force_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for trial in 0..30 {
        let w = rng.random_range(1..=64);
        let h = rng.random_range(1..=64);
        let classes = common::random_classes(w * h, rng.random_range(0.0..0.1), rng.random_range(0.0..0.2), &mut rng);
        let cfg = InflationConfig {
            robot_radius: rng.random_range(0.0..0.6),
            decay_radius: rng.random_range(0.1..2.0),
            unknown_is_lethal: trial % 2 == 0,
        };
        let g = GridGeometry::new(w, h, 0.1, 0.0, 0.0);
        let grid = OccupancyGrid::from_classes(g, &SensorModel::default(), &classes);
        let sources: Vec<bool> = classes
            .iter()
            .map(|&c| c == CellClass::Occupied || (cfg.unknown_is_lethal && c == CellClass::Unknown))
            .collect();
        let d = common::brute_force_distance(w, h, &sources);
        let c = inflate(&grid, &cfg);
        for i in 0..w * h {
            let want = if d[i].is_finite() { cfg.cost_at(d[i] * 0.1) } else { 0 };
            assert_eq!(c.costs()[i], want, "trial {trial} cell {i}");
        }
    }
}

#[test]
fn dwa_is_safe_on_random_scenarios() {
    let cfg = DwaConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for k in 0..200 {
        let s = common::dwa_scenario(cfg.robot_radius, &mut rng);
        let (admissible, clear) = common::dwa_step_is_safe(&s, &cfg);
        assert!(admissible && clear, "scenario {k}: {:?}", s.pose);
    }
}

#[test]
fn dwa_stops_when_boxed_in() {
    let cfg = DwaConfig::default();
    let pose = Pose::new(0.0, 0.0, 0.0);
    let ring: Vec<(f64, f64)> = (0..360)
        .map(|i| {
            let a = (i as f64).to_radians();
            (0.36 * a.cos(), 0.36 * a.sin())
        })
        .collect();
    let path = Path {
        cells: vec![(0, 0), (1, 0)],
        points: vec![(0.0, 0.0), (5.0, 0.0)],
        cost_units: 0,
        total_cost: 0.0,
    };
    let vel = fieldnav::Twist::planar(0.4, 0.0);
    assert_eq!(dwa_command(&pose, &vel, &path, &ring, &cfg), DwaCommand::Stop);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn costmap_nonincreasing_with_distance(seed in any::<u64>(), rr in 0.0f64..0.8, dr in 0.05f64..2.0) {
        let cfg = InflationConfig { robot_radius: rr, decay_radius: dr, unknown_is_lethal: true };
        let mut prev = LETHAL;
        for k in 0..400 {
            let c = cfg.cost_at(k as f64 * 0.01);
            prop_assert!(c <= prev);
            prev = c;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (20, 20);
        let classes = common::random_classes(w * h, 0.05, 0.05, &mut rng);
        let grid = OccupancyGrid::from_classes(GridGeometry::new(w, h, 0.2, 0.0, 0.0), &SensorModel::default(), &classes);
        let c = inflate(&grid, &cfg);
        for i in 0..w * h {
            if classes[i] == CellClass::Occupied {
                prop_assert_eq!(c.costs()[i], LETHAL);
            }
        }
    }

    #[test]
    fn astar_paths_are_well_formed(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_costmap(25, 25, 0.15, &mut rng);
        let open = traversable_cells(&c);
        let g = *c.geometry();
        let s = g.coords(open[rng.random_range(0..open.len())]);
        let t = g.coords(open[rng.random_range(0..open.len())]);
        if let Ok(p) = plan_astar(&c, s, t) {
            check_path(&c, &p, s, t);
        }
    }

    #[test]
    fn dwa_argmax_ignores_weight_scale(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let base = DwaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::dwa_scenario(base.robot_radius, &mut rng);
        let scaled = DwaConfig {
            w_heading: base.w_heading * scale,
            w_clearance: base.w_clearance * scale,
            w_velocity: base.w_velocity * scale,
            ..base
        };
        prop_assert_eq!(
            dwa_command(&s.pose, &s.vel, &s.path, &s.obstacles, &base),
            dwa_command(&s.pose, &s.vel, &s.path, &s.obstacles, &scaled)
        );
    }

    #[test]
    fn goal_tolerance_is_inclusive(x in -5.0f64..5.0, y in -5.0f64..5.0, yaw in -3.0f64..3.0, tol in 0.01f64..1.0) {
        let goal = Pose::new(x, y, yaw);
        prop_assert!(goal_reached(&goal, &goal, 0.0, 0.0));
        let off = Pose::new(x + tol, y, yaw);
        prop_assert!(goal_reached(&off, &goal, off.distance(&goal), 0.0));
        let turned = Pose::new(x, y, yaw + std::f64::consts::PI);
        prop_assert!(!goal_reached(&turned, &goal, 1.0, std::f64::consts::PI / 8.0));
    }
}
