//! Costmap inflation, A* global planning and the dynamic-window local
//! planner.

mod astar;
mod costmap;
mod dwa;
mod edt;

pub use astar::{
    dijkstra, plan_astar, plan_to_nearest, step_cost_units, write_path_csv, CostField, Path, COST_UNIT,
};
pub use costmap::{inflate, Costmap, InflationConfig, INSCRIBED, LETHAL};
pub use dwa::{
    brake_rollout, carrot_point, dwa_command, evaluate_window, free_arc_length, goal_reached,
    is_admissible, DwaCommand, DwaConfig, DwaSample,
};
pub use edt::squared_edt;
