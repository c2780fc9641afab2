//! The node graph as a deterministic tick loop: message bus, altitude
//! hold, configuration, mission orchestration and output artifacts.

mod bus;
mod config;
mod nodes;
mod pid;
mod render;
mod report;
mod run;

pub use bus::{Bus, BusMessage, Payload, SubscriberId, TfFrame, TOPICS};
pub use config::MissionConfig;
pub use nodes::{boustrophedon, Anchor, GoalSpec, GoalState, MoveBase};
pub use pid::{pid_step, AltitudePlant, PidState};
pub use render::{render_trajectory, Canvas};
pub use report::{
    ExplorationReport, MapFidelity, MissionReport, NavigationReport, PhaseReport, SafetyReport, SlamReport, SurveyReport,
};
pub use run::{run_mission, MissionArtifacts, MissionOutcome, EXIT_BUDGET, EXIT_DEGENERACY, EXIT_INPUT, EXIT_SUCCESS};
