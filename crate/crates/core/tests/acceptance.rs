//! Acceptance criteria, one line each. Exits nonzero if any fails.

mod common;

use fieldnav::cropsense::{classify, metrics_from_confusion, profile_from_paper};
use fieldnav::exploration::find_frontiers;
use fieldnav::localization::{kld_sample_size, KldConfig};
use fieldnav::mapping::{CellClass, OccupancyGrid, SensorModel};
use fieldnav::mission::{pid_step, run_mission, AltitudePlant, MissionConfig, MissionOutcome, PidState};
use fieldnav::planning::{inflate, plan_astar, DwaConfig, InflationConfig, INSCRIBED};
use fieldnav::raycast::GridGeometry;
use fieldnav::simworld::{step_kinematics, CropClass};
use fieldnav::{Pose, Twist};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeSet;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn field_run() -> (MissionOutcome, f64) {
    let cfg = MissionConfig::parse(&common::bundled_config("field")).expect("bundled config");
    let world = common::bundled_world("field");
    let t0 = Instant::now();
    let out = run_mission(&cfg, &world, 1, None).expect("field mission");
    (out, t0.elapsed().as_secs_f64())
}

fn exploration(out: &MissionOutcome, total: f64) -> Outcome {
    let e = &out.report.exploration;
    // the wall time covers takeoff and exploration, the phases that end
    // at exploration_done
    let explore: f64 = out
        .wall_seconds
        .iter()
        .filter(|(k, _)| k == "takeoff" || k == "explore")
        .map(|(_, v)| v)
        .sum();
    outcome(
        e.done && e.coverage_pct >= 98.0 && explore < 120.0,
        format!(
            "done {} coverage {:.2}% ({} of {}) explore wall {:.1} s (whole mission {:.1} s)",
            e.done, e.coverage_pct, e.classified_reachable_cells, e.reachable_cells, explore, total
        ),
    )
}

fn fidelity(out: &MissionOutcome) -> Outcome {
    let f = &out.report.map_fidelity;
    outcome(
        f.fraction >= 0.95,
        format!("{:.4} ({} of {} cells seen by >= 3 beams)", f.fraction, f.correct_cells, f.observed_cells),
    )
}

fn condensation() -> Outcome {
    let world = common::bundled_world("corridor");
    let mut good = 0;
    let mut worst_ratio = f64::INFINITY;
    let mut worst_error: f64 = 0.0;
    for seed in 0..100 {
        let c = common::condensation(&world, seed);
        let ratio = c.trace_before / c.trace_after;
        worst_ratio = worst_ratio.min(ratio);
        worst_error = worst_error.max(c.error);
        if ratio >= 10.0 && c.error < 0.2 {
            good += 1;
        }
    }
    outcome(
        good >= 95,
        format!("{good}/100 seeds; smallest trace reduction {worst_ratio:.1}x, largest error {worst_error:.3} m"),
    )
}

fn astar_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t0 = Instant::now();
    let (mut solved, mut mismatches) = (0, 0);
    for _ in 0..100 {
        let c = common::random_costmap(50, 50, 0.2, &mut rng);
        let open: Vec<usize> = (0..2500).filter(|&i| c.costs()[i] < INSCRIBED).collect();
        let s = open[rng.random_range(0..open.len())];
        let t = open[rng.random_range(0..open.len())];
        let g = *c.geometry();
        let oracle = common::oracle_dijkstra(c.costs(), 50, 50, s);
        match plan_astar(&c, g.coords(s), g.coords(t)) {
            Ok(p) => {
                solved += 1;
                mismatches += (p.cost_units != oracle[t]) as u32;
            }
            Err(_) => mismatches += (oracle[t] != u64::MAX) as u32,
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 5.0,
        format!("{mismatches} mismatches, {solved} solvable instances, {secs:.2} s"),
    )
}

fn dwa_safety() -> Outcome {
    let cfg = DwaConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut violations, mut collisions, mut stops) = (0, 0, 0);
    for _ in 0..1000 {
        let s = common::dwa_scenario(cfg.robot_radius, &mut rng);
        if fieldnav::planning::dwa_command(&s.pose, &s.vel, &s.path, &s.obstacles, &cfg) == fieldnav::planning::DwaCommand::Stop {
            stops += 1;
        }
        let (admissible, clear) = common::dwa_step_is_safe(&s, &cfg);
        violations += !admissible as u32;
        collisions += !clear as u32;
    }
    outcome(
        violations == 0 && collisions == 0,
        format!("{violations} admissibility violations, {collisions} collisions, {stops} stops of 1000"),
    )
}

fn kld_sizing() -> Outcome {
    let cfg = KldConfig::default();
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - cfg.delta);
    let direct = |k: usize, cfg: &KldConfig| -> usize {
        if k <= 1 {
            return cfg.n_min;
        }
        let km1 = (k - 1) as f64;
        let a = 2.0 / (9.0 * km1);
        let n = (km1 / (2.0 * cfg.epsilon) * (1.0 - a + a.sqrt() * z).powi(3)).ceil() as usize;
        n.clamp(cfg.n_min, cfg.n_max)
    };
    let ks = [1usize, 2, 10, 100, 1000];
    let got: Vec<usize> = ks.iter().map(|&k| kld_sample_size(k, &cfg)).collect();
    let want: Vec<usize> = ks.iter().map(|&k| direct(k, &cfg)).collect();
    let unclamped = KldConfig {
        n_min: 1,
        ..cfg
    };
    let two = kld_sample_size(2, &unclamped);
    let monotone = (1..5000).all(|k| kld_sample_size(k + 1, &cfg) >= kld_sample_size(k, &cfg));
    outcome(
        got == want && got[0] == cfg.n_min && two == 66 && monotone,
        format!("n(k) = {got:?}, direct {want:?}, k=2 unclamped {two}, monotone {monotone}"),
    )
}

fn detector(out: &MissionOutcome, dt: f64) -> Outcome {
    let p = profile_from_paper();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [[0u64; 3]; 3];
    for truth in CropClass::ALL {
        for _ in 0..100_000 {
            counts[truth.index()][classify(truth, &p, &mut rng).index()] += 1;
        }
    }
    let m = metrics_from_confusion(&counts, &[0; 3]);
    let targets = [(1.00, 0.99), (0.99, 1.00), (1.00, 1.00)];
    let mut ok = true;
    let mut detail = String::new();
    for (k, c) in CropClass::ALL.iter().enumerate() {
        let (pr, rc) = (m[k].precision.unwrap(), m[k].recall.unwrap());
        ok &= (pr - targets[k].0).abs() <= 0.01 && (rc - targets[k].1).abs() <= 0.01;
        detail += &format!("{} P {pr:.4} R {rc:.4}; ", c.name());
    }
    let rate = out.report.detector_frames as f64 / (out.report.total_ticks as f64 * dt);
    ok &= (rate - 42.3).abs() <= 0.1;
    outcome(ok, format!("{detail}cadence {rate:.3} Hz over {} frames", out.report.detector_frames))
}

fn pid_hold() -> Outcome {
    let dt = 0.05;
    let mut pid = PidState::default();
    let mut plant = AltitudePlant::new(0.2);
    let (mut worst_after, mut max_vz) = (0.0f64, 0.0f64);
    for k in 1..=400 {
        let vz = pid_step(&mut pid, plant.z, dt);
        max_vz = max_vz.max(vz.abs()).max(plant.vz.abs());
        plant.step(vz, dt);
        if k as f64 * dt >= 10.0 {
            worst_after = worst_after.max((plant.z - 2.0).abs());
        }
    }
    outcome(
        worst_after <= 0.05 && max_vz <= pid.vz_max,
        format!("max |z - 2| over [10, 20] s {worst_after:.4} m, max |vz| {max_vz:.3} m/s"),
    )
}

fn navigation(out: &MissionOutcome) -> Outcome {
    match &out.report.navigation {
        Some(n) => outcome(
            n.reached && n.collisions == 0 && out.report.safety.collisions == 0,
            format!(
                "reached {} error {:.3} m / {:.3} rad, {} collisions on the leg, {} in the mission",
                n.reached, n.final_error_xy, n.final_error_yaw, n.collisions, out.report.safety.collisions
            ),
        ),
        None => outcome(false, "navigation did not run".into()),
    }
}

fn determinism(a: &MissionOutcome, b: &MissionOutcome) -> Outcome {
    let mut differ = Vec::new();
    if a.report.to_json() != b.report.to_json() {
        differ.push("report.json");
    }
    for name in ["map.pgm", "disease.csv"] {
        if a.artifacts.get(name).is_none() || a.artifacts.get(name) != b.artifacts.get(name) {
            differ.push(name);
        }
    }
    outcome(differ.is_empty(), if differ.is_empty() { "report.json, map.pgm, disease.csv identical".into() } else { format!("differ: {differ:?}") })
}

fn frontier_oracle(rng: &mut ChaCha8Rng) -> bool {
    let (w, h) = (20, 20);
    let classes = common::random_classes(w * h, 0.15, 0.35, rng);
    let grid = OccupancyGrid::from_classes(GridGeometry::new(w, h, 0.25, 0.0, 0.0), &SensorModel::default(), &classes);
    let found: BTreeSet<usize> = find_frontiers(&grid, 1).into_iter().flat_map(|c| c.cells).collect();
    let at = |x: i64, y: i64| (x >= 0 && y >= 0 && x < w as i64 && y < h as i64).then(|| classes[y as usize * w + x as usize]);
    let want: BTreeSet<usize> = (0..w * h)
        .filter(|&i| {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            classes[i] == CellClass::Free
                && [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| at(x + dx, y + dy) == Some(CellClass::Unknown))
        })
        .collect();
    found == want
}

fn inflate_oracle(rng: &mut ChaCha8Rng) -> bool {
    let (w, h) = (rng.random_range(1..=64), rng.random_range(1..=64));
    let classes = common::random_classes(w * h, rng.random_range(0.0..0.1), rng.random_range(0.0..0.2), rng);
    let cfg = InflationConfig {
        robot_radius: rng.random_range(0.0..0.6),
        decay_radius: rng.random_range(0.1..2.0),
        unknown_is_lethal: rng.random(),
    };
    let grid = OccupancyGrid::from_classes(GridGeometry::new(w, h, 0.1, 0.0, 0.0), &SensorModel::default(), &classes);
    let sources: Vec<bool> = classes
        .iter()
        .map(|&c| c == CellClass::Occupied || (cfg.unknown_is_lethal && c == CellClass::Unknown))
        .collect();
    let d = common::brute_force_distance(w, h, &sources);
    let c = inflate(&grid, &cfg);
    (0..w * h).all(|i| c.costs()[i] == if d[i].is_finite() { cfg.cost_at(d[i] * 0.1) } else { 0 })
}

fn kinematics_error(rng: &mut ChaCha8Rng) -> f64 {
    let pose = Pose::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.1..3.1));
    let cmd = Twist {
        vx: rng.random_range(-1.0..1.0),
        vy: rng.random_range(-0.5..0.5),
        omega: rng.random_range(-2.0..2.0),
        vz: 0.0,
    };
    let dt = rng.random_range(0.01..2.0);
    let exact = step_kinematics(&pose, &cmd, dt);
    let n = 10_000;
    let h = dt / n as f64;
    let (mut x, mut y, mut th) = (pose.x, pose.y, pose.yaw);
    for _ in 0..n {
        // midpoint heading for each substep
        let tm = th + 0.5 * cmd.omega * h;
        x += (cmd.vx * tm.cos() - cmd.vy * tm.sin()) * h;
        y += (cmd.vx * tm.sin() + cmd.vy * tm.cos()) * h;
        th += cmd.omega * h;
    }
    (exact.x - x).hypot(exact.y - y)
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let frontier_ok = (0..50).filter(|_| frontier_oracle(&mut rng)).count();
    let inflate_ok = (0..50).filter(|_| inflate_oracle(&mut rng)).count();
    let kin = (0..200).map(|_| kinematics_error(&mut rng)).fold(0.0, f64::max);
    outcome(
        frontier_ok == 50 && inflate_ok == 50 && kin < 1e-3,
        format!("frontier {frontier_ok}/50, inflate {inflate_ok}/50, kinematics max error {kin:.2e} m"),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let cfg = MissionConfig::parse(&common::bundled_config("field")).expect("bundled config");
    let (first, total) = field_run();
    results.push(("1 exploration completeness", exploration(&first, total)));
    results.push(("2 map fidelity", fidelity(&first)));
    results.push(("3 MCL condensation", condensation()));
    results.push(("4 A* optimality", astar_optimality()));
    results.push(("5 DWA safety", dwa_safety()));
    results.push(("6 KLD sizing", kld_sizing()));
    results.push(("7 detector statistics", detector(&first, cfg.dt)));
    results.push(("8 PID altitude hold", pid_hold()));
    results.push(("9 point-to-point navigation", navigation(&first)));
    let (second, _) = field_run();
    results.push(("10 determinism", determinism(&first, &second)));
    results.push(("11 oracle suites", oracles()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
