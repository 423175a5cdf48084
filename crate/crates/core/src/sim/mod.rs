//! Fixed-step simulation of the robot, a pedestrian crowd, and the executor.
//!
//! One call to [`World::tick`] advances time by `dt` through eight sub-steps
//! in a fixed order:
//!
//! 1. replan when navigating and the replan timer has elapsed or no path exists
//! 2. build the observation snapshot
//! 3. select a velocity and convert it to a differential-drive command
//! 4. integrate the robot's unicycle kinematics
//! 5. integrate pedestrians toward their waypoints
//! 6. detect and count collisions
//! 7. emit arrival and dwell-completion events
//! 8. feed the events to the executor and apply its effects
//!
//! Everything random comes from one seeded ChaCha8 stream, so a run is a pure
//! function of map, landmarks, script, and config.

mod pedestrians;
mod run;
mod scenario;
mod world;

pub use pedestrians::{
    spawn_pedestrians, PedestrianState, MAX_PEDESTRIAN_SPEED, MIN_PEDESTRIAN_SPEED,
};
pub use run::{run_scripted, run_scripted_with, MetricsReport, RejectedCommand, TaskTiming};
pub use scenario::{LoadedScenario, Scenario, ScheduledCommand};
pub use world::{CollisionCounts, RobotState, TickOutcome, World, WorldSnapshot};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nav::{ControllerParams, NavError};
use crate::world::WorldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Seconds per tick.
    pub dt: f64,
    pub seed: u64,
    pub pedestrian_count: usize,
    pub pedestrian_radius: f64,
    pub arrival_tolerance: f64,
    /// Seconds each pickup or delivery action takes.
    pub dwell: f64,
    pub replan_period: f64,
    /// Scripted runs stop here even if tasks remain.
    pub max_sim_time: f64,
    pub controller: ControllerParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            seed: 0,
            pedestrian_count: 0,
            pedestrian_radius: 0.3,
            arrival_tolerance: 0.3,
            dwell: 2.0,
            replan_period: 1.0,
            max_sim_time: 600.0,
            controller: ControllerParams::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt <= 0.2) {
            return bad(format!("dt must be in (0, 0.2], got {}", self.dt));
        }
        for (name, value) in [
            ("arrival_tolerance", self.arrival_tolerance),
            ("pedestrian_radius", self.pedestrian_radius),
            ("replan_period", self.replan_period),
            ("max_sim_time", self.max_sim_time),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(format!("{name} must be positive, got {value}"));
            }
        }
        if !(self.dwell >= 0.0 && self.dwell.is_finite()) {
            return bad(format!("dwell must be non-negative, got {}", self.dwell));
        }
        self.controller.validate()?;
        Ok(())
    }

    /// Sets a field by its scenario `param` name.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), SimError> {
        let count = |v: f64| -> Result<usize, SimError> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(SimError::InvalidConfig(format!(
                    "{name} must be a non-negative integer, got {v}"
                )))
            }
        };
        let c = &mut self.controller;
        match name {
            "dt" => self.dt = value,
            "arrival_tolerance" => self.arrival_tolerance = value,
            "dwell" => self.dwell = value,
            "replan_period" => self.replan_period = value,
            "max_sim_time" => self.max_sim_time = value,
            "pedestrian_radius" => self.pedestrian_radius = value,
            "v_max" => c.v_max = value,
            "omega_max" => c.omega_max = value,
            "robot_radius" => c.robot_radius = value,
            "horizon" => c.horizon = value,
            "n_speed" => c.n_speed = count(value)?,
            "n_heading" => c.n_heading = count(value)?,
            "k_omega" => c.k_omega = value,
            "waypoint_advance_radius" => c.waypoint_advance_radius = value,
            other => {
                return Err(SimError::InvalidConfig(format!(
                    "unknown parameter {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Whole ticks covering `seconds`, never fewer than one.
    pub(crate) fn ticks_for(&self, seconds: f64) -> u64 {
        ((seconds / self.dt) - 1e-9).ceil().max(1.0) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("scenario format error on line {line}: {reason}")]
    ScenarioFormat { line: usize, reason: String },
    #[error("need {needed} free cells at least 1 m from the robot start, found {available}")]
    InsufficientFreeSpace { needed: usize, available: usize },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Nav(#[from] NavError),
}
