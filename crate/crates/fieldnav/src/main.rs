use clap::{Parser, Subcommand};
use fieldnav::cropsense::DetectorProfile;
use fieldnav::mapping::{read_map_metadata, read_pgm, SensorModel};
use fieldnav::mission::{render_trajectory, run_mission, MissionConfig, MissionReport, EXIT_INPUT};
use fieldnav::planning::{inflate, plan_astar, write_path_csv, InflationConfig};
use fieldnav::simworld::load_world;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fieldnav", version, about = "Field-survey navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full mission and write its artifacts.
    Run {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan an A* path on a saved map and print it as CSV.
    Plan {
        #[arg(long)]
        map: PathBuf,
        /// Metadata file; defaults to the map path with a .yaml extension.
        #[arg(long)]
        metadata: Option<PathBuf>,
        #[arg(long, value_parser = parse_point)]
        start: (f64, f64),
        #[arg(long, value_parser = parse_point)]
        goal: (f64, f64),
        #[arg(long, default_value_t = 0.3)]
        robot_radius: f64,
    },
    /// Re-render trajectory.ppm from a report and the map saved next to it.
    Replay {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok((p(x)?, p(y)?))
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_map(map: &Path, metadata: Option<&Path>) -> Result<fieldnav::mapping::OccupancyGrid, String> {
    let meta_path = metadata.map(Path::to_path_buf).unwrap_or_else(|| map.with_extension("yaml"));
    let meta = read_map_metadata(&read_text(&meta_path)?).map_err(|e| format!("{}: {e}", meta_path.display()))?;
    read_pgm(&read(map)?, &meta, &SensorModel::default()).map_err(|e| format!("{}: {e}", map.display()))
}

fn run(world: &Path, config: &Path, seed: u64, out: &Path) -> Result<i32, String> {
    let world = load_world(&read_text(world)?).map_err(|e| format!("{}: {e}", world.display()))?;
    let cfg = MissionConfig::parse(&read_text(config)?).map_err(|e| format!("{}: {e}", config.display()))?;
    let profile = match &cfg.detector_profile {
        Some(p) => {
            let path = config.parent().unwrap_or(Path::new(".")).join(p);
            Some(DetectorProfile::from_json(&read_text(&path)?).map_err(|e| format!("{}: {e}", path.display()))?)
        }
        None => None,
    };
    let outcome = run_mission(&cfg, &world, seed, profile).map_err(|e| e.to_string())?;
    outcome.write_to(out).map_err(|e| e.to_string())?;
    let r = &outcome.report;
    eprintln!(
        "{}: {} ticks, exploration coverage {:.1}%, map fidelity {:.3}, crop coverage {:.3}, collisions {}",
        r.status, r.total_ticks, r.exploration.coverage_pct, r.map_fidelity.fraction, r.disease.coverage, r.safety.collisions
    );
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(r.exit_code)
}

fn plan(map: &Path, metadata: Option<&Path>, start: (f64, f64), goal: (f64, f64), radius: f64) -> Result<i32, String> {
    let grid = load_map(map, metadata)?;
    let costmap = inflate(
        &grid,
        &InflationConfig {
            robot_radius: radius,
            ..InflationConfig::default()
        },
    );
    let g = costmap.geometry();
    let cell = |(x, y): (f64, f64)| g.cell_of(x, y).ok_or(format!("({x}, {y}) is outside the map"));
    let path = plan_astar(&costmap, cell(start)?, cell(goal)?).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    write_path_csv(&mut out, &path).map_err(|e| e.to_string())?;
    print!("{}", String::from_utf8_lossy(&out));
    eprintln!("{} waypoints, length {:.3} m, cost {:.3}", path.len(), path.length(), path.total_cost);
    Ok(0)
}

fn replay(report: &Path, out: Option<&Path>) -> Result<i32, String> {
    let r = MissionReport::from_json(&read_text(report)?).map_err(|e| format!("{}: {e}", report.display()))?;
    let dir = report.parent().unwrap_or(Path::new("."));
    let grid = load_map(&dir.join("map.pgm"), None)?;
    let (planned, endpoints) = match &r.navigation {
        Some(n) => (n.planned_path.clone(), vec![[n.start[0], n.start[1]], [n.goal[0], n.goal[1]]]),
        None => (Vec::new(), Vec::new()),
    };
    let ppm = render_trajectory(&grid, &r.trajectory, &planned, &endpoints);
    let target = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join("trajectory.ppm"));
    std::fs::write(&target, ppm).map_err(|e| format!("{}: {e}", target.display()))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { world, config, seed, out } => run(world, config, *seed, out),
        Command::Plan {
            map,
            metadata,
            start,
            goal,
            robot_radius,
        } => plan(map, metadata.as_deref(), *start, *goal, *robot_radius),
        Command::Replay { report, out } => replay(report, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
