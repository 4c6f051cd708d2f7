//! Navigation stack for a two-wheeled differential-drive robot: dead-reckoning
//! odometry, grid A* planning, reactive behaviors and a deterministic
//! simulator to run them against.
//!
//! Units are millimetres, seconds and radians. The map frame has its origin
//! at the top-left corner of the grid with +x along columns and +y along
//! rows; positive angles turn from +x towards +y.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod behaviors;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod maps;
pub mod odometry;
pub mod planner;
pub mod sim;

pub use error::{Error, MapError, Result};
pub use geometry::{normalize_angle, Cell, Point2, Pose, RobotConfig, WheelDelta};
pub use grid::GridMap;
pub use odometry::{
    heading_to, integrate, waypoint_step, MotionCommand, OdometryState, WaypointPlan, WaypointStep,
};
pub use planner::{
    astar, parse_map, render_overlay, simplify, to_waypoints, AsciiMap, GridPath, Path,
};
