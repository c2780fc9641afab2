//! Ground-truth world, UAV kinematics and the raycast lidar.

mod kinematics;
mod lidar;
mod world;

pub use kinematics::step_kinematics;
pub use lidar::{simulate_scan, LaserScan, LidarConfig};
pub use world::{collision_check, load_world, serialize_world, CellKind, CropClass, World};
