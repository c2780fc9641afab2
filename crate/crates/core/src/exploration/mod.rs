//! Frontier detection, clustering and goal selection.

mod frontier;
mod goal;

pub use frontier::{find_frontiers, frontier_mask, write_frontiers_csv, FrontierCluster};
pub use goal::{exploration_done, select_goal, Blacklist, ExploreGoal, GoalWeights};
