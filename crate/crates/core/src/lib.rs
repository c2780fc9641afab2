//! A deterministic 2D field-survey navigation stack and simulator.
//!
//! A simulated UAV explores an unknown field with frontier-driven
//! Rao-Blackwellized particle-filter SLAM, localizes with KLD-sampling
//! Monte-Carlo localization, navigates with A* on an inflated costmap plus a
//! dynamic-window local planner, holds altitude with a PID loop, and fuses
//! statistically simulated crop-disease detections into a disease map.
//!
//! The nodes run inside a single-threaded tick loop connected by a
//! one-tick-latency pub/sub bus (see [`mission`]), so a seed plus a config
//! fully determines every output byte.

pub mod cropsense;
pub mod error;
pub mod exploration;
pub mod geometry;
pub mod localization;
pub mod mapping;
pub mod mission;
pub mod planning;
pub mod raycast;
pub mod simworld;

pub use error::{Error, Result};
pub use geometry::{OdomDelta, Pose, Twist};
