//! Sampled velocity-obstacle avoidance against constant-velocity pedestrians.
//!
//! A candidate robot velocity `v` is inadmissible for pedestrian `j` when the
//! relative trajectory `p_r - p_j + t·(v - v_j)` comes closer than
//! `r_robot + r_j` for some `t ∈ (0, τ]`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::world::{wrap_angle, GridMap, Pose2D, Vec2};

use super::{to_diff_drive, ControllerParams};

/// What the controller sees of one pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedAgent {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct ObservationSnapshot<'a> {
    pub robot: Pose2D,
    /// Current world-frame robot velocity.
    pub robot_velocity: Vec2,
    pub pedestrians: Vec<ObservedAgent>,
    pub goal: Vec2,
    pub map: &'a GridMap,
}

/// Truncated collision cone in robot-velocity space for one pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionCone {
    /// The pedestrian's velocity; the cone is built around relative velocity.
    pub apex: Vec2,
    /// Direction from robot to pedestrian.
    pub axis_angle: f64,
    /// `asin(R / d)`; `π` when all-blocking.
    pub half_angle: f64,
    /// Center distance `d`.
    pub distance: f64,
    /// Combined radius `R = r_robot + r_j`.
    pub combined_radius: f64,
    pub horizon: f64,
    /// The bodies already overlap (`d ≤ R`); every velocity is blocked.
    pub all_blocking: bool,
}

impl CollisionCone {
    /// Geometric membership: inside the truncating disc `(p_j - p_r)/τ`
    /// of radius `R/τ`, or inside the cone beyond the disc's tangent line.
    pub fn contains(&self, velocity: Vec2) -> bool {
        if self.all_blocking {
            return true;
        }
        let rel = velocity - self.apex;
        let axis = Vec2::from_polar(1.0, self.axis_angle);
        let disc_center = axis * (self.distance / self.horizon);
        let disc_radius = self.combined_radius / self.horizon;
        if (rel - disc_center).norm() < disc_radius {
            return true;
        }
        let along = rel.dot(axis);
        let cutoff = (self.distance * self.distance - self.combined_radius * self.combined_radius)
            / (self.distance * self.horizon);
        if along <= cutoff {
            return false;
        }
        let angle = wrap_angle(rel.angle() - self.axis_angle).abs();
        angle < self.half_angle
    }
}

/// Builds one truncated cone per pedestrian.
pub fn compute_velocity_obstacles(
    obs: &ObservationSnapshot<'_>,
    params: &ControllerParams,
) -> Vec<CollisionCone> {
    let robot = obs.robot.position();
    obs.pedestrians
        .iter()
        .map(|ped| {
            let offset = ped.position - robot;
            let distance = offset.norm();
            let combined_radius = params.robot_radius + ped.radius;
            let all_blocking = distance <= combined_radius;
            CollisionCone {
                apex: ped.velocity,
                axis_angle: offset.angle(),
                half_angle: if all_blocking {
                    PI
                } else {
                    (combined_radius / distance).asin()
                },
                distance,
                combined_radius,
                horizon: params.horizon,
                all_blocking,
            }
        })
        .collect()
}

/// Minimum of `|offset + t·rel_velocity|` over `t ∈ (0, horizon]`, where
/// `offset` is robot minus pedestrian position. The infimum at `t → 0` is
/// the current separation.
pub fn closest_approach(offset: Vec2, rel_velocity: Vec2, horizon: f64) -> f64 {
    let speed2 = rel_velocity.norm_squared();
    let t = if speed2 > 0.0 {
        (-offset.dot(rel_velocity) / speed2).clamp(0.0, horizon)
    } else {
        0.0
    };
    (offset + rel_velocity * t).norm()
}

/// Whether `velocity` keeps at least `r_robot + r_j` from every pedestrian
/// over the horizon.
pub fn is_admissible(
    obs: &ObservationSnapshot<'_>,
    velocity: Vec2,
    params: &ControllerParams,
) -> bool {
    let robot = obs.robot.position();
    obs.pedestrians.iter().all(|ped| {
        let min_dist = closest_approach(
            robot - ped.position,
            velocity - ped.velocity,
            params.horizon,
        );
        min_dist >= params.robot_radius + ped.radius
    })
}

/// The sampled candidate set, in a fixed order: zero velocity, the polar grid
/// (speeds above zero × headings in `(-π, π]`), then `preferred`.
pub fn candidate_velocities(preferred: Vec2, params: &ControllerParams) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(2 + (params.n_speed - 1) * params.n_heading);
    out.push(Vec2::ZERO);
    for i in 1..params.n_speed {
        let speed = params.v_max * i as f64 / (params.n_speed - 1) as f64;
        for k in 0..params.n_heading {
            let heading = -PI + 2.0 * PI * (k + 1) as f64 / params.n_heading as f64;
            out.push(Vec2::from_polar(speed, heading));
        }
    }
    out.push(preferred);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityChoice {
    pub velocity: Vec2,
    /// `false` when no candidate was collision-free and the robot must stop.
    pub admissible: bool,
}

/// Ranking key used to pick among admissible candidates: distance to the
/// preferred velocity, then heading change, then speed, then heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateKey {
    pub distance_squared: f64,
    pub heading_change: f64,
    pub speed: f64,
    pub heading: f64,
}

impl CandidateKey {
    pub fn new(candidate: Vec2, preferred: Vec2, robot_heading: f64) -> Self {
        let speed = candidate.norm();
        let heading = if speed > 0.0 {
            candidate.angle()
        } else {
            robot_heading
        };
        CandidateKey {
            distance_squared: (candidate - preferred).norm_squared(),
            heading_change: wrap_angle(heading - robot_heading).abs(),
            speed,
            heading,
        }
    }

    pub fn cmp(&self, other: &Self) -> Ordering {
        self.distance_squared
            .total_cmp(&other.distance_squared)
            .then(self.heading_change.total_cmp(&other.heading_change))
            .then(self.speed.total_cmp(&other.speed))
            .then(self.heading.total_cmp(&other.heading))
    }
}

/// Picks the admissible candidate closest to `preferred`.
pub fn select_velocity(
    obs: &ObservationSnapshot<'_>,
    preferred: Vec2,
    params: &ControllerParams,
) -> VelocityChoice {
    select_velocity_where(obs, preferred, params, |_| true)
}

/// [`select_velocity`] restricted to candidates that also pass `accept`.
/// Candidates are tried best-first, so `accept` only runs until one passes.
pub fn select_velocity_where(
    obs: &ObservationSnapshot<'_>,
    preferred: Vec2,
    params: &ControllerParams,
    accept: impl Fn(Vec2) -> bool,
) -> VelocityChoice {
    let preferred = clamp_norm(preferred, params.v_max);
    let mut ranked: Vec<(CandidateKey, Vec2)> = candidate_velocities(preferred, params)
        .into_iter()
        .map(|c| (CandidateKey::new(c, preferred, obs.robot.heading), c))
        .collect();
    ranked.sort_by(|a, b| a.0.cmp(&b.0));
    match ranked
        .into_iter()
        .find(|&(_, c)| is_admissible(obs, c, params) && accept(c))
    {
        Some((_, velocity)) => VelocityChoice {
            velocity,
            admissible: true,
        },
        None => VelocityChoice {
            velocity: Vec2::ZERO,
            admissible: false,
        },
    }
}

/// Whether steering toward `velocity` through [`to_diff_drive`] keeps the
/// robot at least `r_robot + r_j` from every constant-velocity pedestrian
/// for the whole horizon, sampled every `step` seconds.
pub fn tracking_is_clear(
    robot: Pose2D,
    velocity: Vec2,
    pedestrians: &[ObservedAgent],
    params: &ControllerParams,
    step: f64,
) -> bool {
    let steps = (params.horizon / step).ceil().max(1.0) as usize;
    let dt = params.horizon / steps as f64;
    let mut pose = robot;
    for k in 1..=steps {
        let cmd = to_diff_drive(velocity, pose, params);
        pose = Pose2D {
            x: pose.x + cmd.linear * pose.heading.cos() * dt,
            y: pose.y + cmd.linear * pose.heading.sin() * dt,
            heading: wrap_angle(pose.heading + cmd.angular * dt),
        };
        let t = k as f64 * dt;
        let here = pose.position();
        if pedestrians
            .iter()
            .any(|p| here.distance(p.position + p.velocity * t) < params.robot_radius + p.radius)
        {
            return false;
        }
    }
    true
}

pub(crate) fn clamp_norm(v: Vec2, max: f64) -> Vec2 {
    let n = v.norm();
    if n > max && n > 0.0 {
        v * (max / n)
    } else {
        v
    }
}
