//! Global planning on the inflated grid plus local velocity-obstacle control.

mod astar;
mod control;
mod vo;

pub use astar::{plan_path, OctileCost, Path};
pub use control::{
    arc_enters_obstacle, line_of_sight, next_waypoint, to_diff_drive, ControllerParams,
    PathFollower, VelocityCommand,
};
pub use vo::{
    candidate_velocities, closest_approach, compute_velocity_obstacles, is_admissible,
    select_velocity, select_velocity_where, tracking_is_clear, CandidateKey, CollisionCone,
    ObservationSnapshot, ObservedAgent, VelocityChoice,
};

pub(crate) use astar::plan_cells;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NavError {
    #[error("start position is occupied or off the map")]
    StartOccupied,
    #[error("goal position is occupied or off the map")]
    GoalOccupied,
    #[error("no path to goal")]
    NoPath,
    #[error("path has no waypoints")]
    EmptyPath,
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),
}
