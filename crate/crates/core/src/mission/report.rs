use crate::cropsense::DiseaseEvaluation;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub name: String,
    pub ticks: u64,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub done: bool,
    /// Ground-truth reachable traversable cells classified (not Unknown)
    /// in the final map, percent.
    pub coverage_pct: f64,
    pub reachable_cells: u64,
    pub classified_reachable_cells: u64,
    pub goals_selected: u64,
    pub goals_succeeded: u64,
    pub goals_failed: u64,
    pub blacklisted: u64,
    /// Goal legs that ended without reducing the Unknown count.
    pub legs_without_progress: u64,
    /// SLAM updates after which the best map had more Unknown cells.
    pub unknown_increases: u64,
    pub frontier_snapshots: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MapFidelity {
    /// Cells crossed or hit by at least three ground-truth beams.
    pub observed_cells: u64,
    pub correct_cells: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlamReport {
    pub particles: usize,
    pub updates: u64,
    pub resamples: u64,
    pub degenerate_updates: u64,
    pub final_position_error: f64,
    pub final_yaw_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SafetyReport {
    /// Ticks at which the robot disc intersected an obstacle.
    pub collisions: u64,
    /// Smallest distance from the robot center to an obstacle cell minus the
    /// robot radius, over all ticks.
    pub min_clearance: f64,
    pub dwa_stops: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SurveyReport {
    pub enabled: bool,
    pub passes: u64,
    /// Goals sent: the two ends of every lane stretch that still needed a look.
    pub waypoints: u64,
    pub reached: u64,
    pub failed: u64,
    pub coverage_reached: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NavigationReport {
    pub start: [f64; 3],
    pub goal: [f64; 3],
    pub reached_start: bool,
    pub reached: bool,
    pub final_error_xy: f64,
    pub final_error_yaw: f64,
    pub ticks: u64,
    pub collisions: u64,
    pub localization_updates: u64,
    pub localization_degeneracies: u64,
    pub final_particles: usize,
    /// Planned path of the start-to-goal leg.
    pub planned_path: Vec<[f64; 2]>,
}

/// Final mission artifact. Everything here is a function of the seed, the
/// config and the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub seed: u64,
    pub config_hash: String,
    pub world_width: usize,
    pub world_height: usize,
    pub resolution: f64,
    pub exit_code: i32,
    pub status: String,
    pub warnings: Vec<String>,
    pub total_ticks: u64,
    /// Camera frames processed over the whole run.
    pub detector_frames: u64,
    pub phases: Vec<PhaseReport>,
    pub exploration: ExplorationReport,
    pub map_fidelity: MapFidelity,
    pub slam: SlamReport,
    pub safety: SafetyReport,
    pub survey: SurveyReport,
    pub disease: DiseaseEvaluation,
    pub navigation: Option<NavigationReport>,
    /// Ground-truth positions every ten ticks.
    pub trajectory: Vec<[f64; 2]>,
}

impl MissionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
