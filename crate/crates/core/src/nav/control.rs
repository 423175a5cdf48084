use serde::{Deserialize, Serialize};

use crate::world::{wrap_angle, GridMap, Pose2D, Vec2};

use super::astar::Path;
use super::NavError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    pub v_max: f64,
    pub omega_max: f64,
    pub robot_radius: f64,
    /// VO time horizon τ, seconds.
    pub horizon: f64,
    pub n_speed: usize,
    pub n_heading: usize,
    /// Proportional heading gain.
    pub k_omega: f64,
    pub waypoint_advance_radius: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            v_max: 0.7,
            omega_max: 1.5,
            robot_radius: 0.3,
            horizon: 3.0,
            n_speed: 8,
            n_heading: 24,
            k_omega: 2.0,
            waypoint_advance_radius: 0.4,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), NavError> {
        let positive = [
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("robot_radius", self.robot_radius),
            ("horizon", self.horizon),
            ("k_omega", self.k_omega),
            ("waypoint_advance_radius", self.waypoint_advance_radius),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(NavError::InvalidParams(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.n_speed < 2 {
            return Err(NavError::InvalidParams("n_speed must be at least 2".into()));
        }
        if self.n_heading < 8 {
            return Err(NavError::InvalidParams(
                "n_heading must be at least 8".into(),
            ));
        }
        Ok(())
    }
}

/// Differential-drive command: forward speed and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub linear: f64,
    pub angular: f64,
}

/// Turns a holonomic velocity into a unicycle command by steering toward
/// the velocity's direction and scaling speed with `cos` of the heading error.
pub fn to_diff_drive(chosen: Vec2, robot: Pose2D, params: &ControllerParams) -> VelocityCommand {
    let speed = chosen.norm();
    if !(speed > 0.0) {
        return VelocityCommand::default();
    }
    let error = wrap_angle(chosen.angle() - robot.heading);
    let angular = (params.k_omega * error).clamp(-params.omega_max, params.omega_max);
    let linear = (speed * error.cos().max(0.0)).clamp(0.0, params.v_max);
    VelocityCommand { linear, angular }
}

/// Tracks progress along a path with a cursor that only moves forward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFollower {
    path: Path,
    cursor: usize,
}

impl PathFollower {
    pub fn new(path: Path) -> Result<Self, NavError> {
        if path.is_empty() {
            return Err(NavError::EmptyPath);
        }
        Ok(Self { path, cursor: 0 })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Advances the cursor past the furthest unpassed waypoint within the
    /// advance radius and returns the first one not yet passed (or the last
    /// waypoint once all are passed).
    pub fn next_waypoint(&mut self, robot: Pose2D, params: &ControllerParams) -> Vec2 {
        let here = robot.position();
        let waypoints = &self.path.waypoints;
        if let Some(last_near) = (self.cursor..waypoints.len())
            .rev()
            .find(|&i| here.distance(waypoints[i]) <= params.waypoint_advance_radius)
        {
            self.cursor = last_near + 1;
        }
        waypoints[self.cursor.min(waypoints.len() - 1)]
    }

    /// [`next_waypoint`](Self::next_waypoint), except that the cursor stops
    /// at the furthest candidate in straight-line sight on `map`. The cursor
    /// never moves backward, so the returned waypoint may still be hidden
    /// when nothing ahead of it is visible.
    pub fn next_visible_waypoint(
        &mut self,
        robot: Pose2D,
        params: &ControllerParams,
        map: &GridMap,
    ) -> Vec2 {
        let here = robot.position();
        let waypoints = &self.path.waypoints;
        let last = waypoints.len() - 1;
        if let Some(last_near) = (self.cursor..waypoints.len())
            .rev()
            .find(|&i| here.distance(waypoints[i]) <= params.waypoint_advance_radius)
        {
            let mut target = (last_near + 1).min(last);
            while target > self.cursor && !line_of_sight(map, here, waypoints[target]) {
                target -= 1;
            }
            self.cursor = self.cursor.max(target);
        }
        waypoints[self.cursor.min(last)]
    }
}

/// Whether the segment from `a` to `b` stays on free cells, sampled at a
/// quarter of the resolution. Both endpoints are checked.
pub fn line_of_sight(map: &GridMap, a: Vec2, b: Vec2) -> bool {
    let length = a.distance(b);
    let samples = (length / (map.resolution() * 0.25)).ceil().max(1.0) as usize;
    (0..=samples).all(|k| {
        let t = k as f64 / samples as f64;
        !map.is_occupied_at(a + (b - a) * t)
    })
}

/// Free-function form of [`PathFollower::next_waypoint`].
pub fn next_waypoint(
    follower: &mut PathFollower,
    robot: Pose2D,
    params: &ControllerParams,
) -> Vec2 {
    follower.next_waypoint(robot, params)
}

/// Whether executing `command` from `pose` for `lookahead` seconds would put
/// the robot center in an occupied cell of `map`.
pub fn arc_enters_obstacle(
    map: &GridMap,
    pose: Pose2D,
    command: VelocityCommand,
    lookahead: f64,
    step: f64,
) -> bool {
    if command.linear <= 0.0 {
        return false;
    }
    let steps = (lookahead / step).ceil().max(1.0) as usize;
    let dt = lookahead / steps as f64;
    let (mut x, mut y, mut heading) = (pose.x, pose.y, pose.heading);
    for _ in 0..steps {
        x += command.linear * heading.cos() * dt;
        y += command.linear * heading.sin() * dt;
        heading = wrap_angle(heading + command.angular * dt);
        if map.is_occupied_at(Vec2::new(x, y)) {
            return true;
        }
    }
    false
}
