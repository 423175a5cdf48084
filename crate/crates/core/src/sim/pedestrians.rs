use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nav::ObservedAgent;
use crate::world::{Cell, GridMap, Vec2};

use super::{SimConfig, SimError};

pub const MIN_PEDESTRIAN_SPEED: f64 = 0.3;
pub const MAX_PEDESTRIAN_SPEED: f64 = 1.5;
const SPAWN_CLEARANCE: f64 = 1.0;
const WAYPOINT_REACHED: f64 = 0.2;

/// A non-reactive walker heading in a straight line to its waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    pub id: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    /// Center of a free cell.
    pub waypoint: Vec2,
    pub speed: f64,
}

impl PedestrianState {
    pub fn observed(&self) -> ObservedAgent {
        ObservedAgent {
            position: self.position,
            velocity: self.velocity,
            radius: self.radius,
        }
    }

    fn aim(&mut self) {
        let to = self.waypoint - self.position;
        let d = to.norm();
        self.velocity = if d > 0.0 {
            to * (self.speed / d)
        } else {
            Vec2::ZERO
        };
    }

    /// One constant-velocity step. A step that would end in an occupied cell
    /// is not taken; the pedestrian stays put and picks a new waypoint.
    pub(crate) fn advance(&mut self, map: &GridMap, free: &[Cell], dt: f64, rng: &mut ChaCha8Rng) {
        let next = self.position + self.velocity * dt;
        if map.is_occupied_at(next) {
            self.waypoint = random_free_point(map, free, rng);
        } else {
            self.position = next;
            if self.position.distance(self.waypoint) <= WAYPOINT_REACHED {
                self.waypoint = random_free_point(map, free, rng);
            }
        }
        self.aim();
    }
}

pub(crate) fn random_free_point(map: &GridMap, free: &[Cell], rng: &mut ChaCha8Rng) -> Vec2 {
    map.cell_to_world(free[rng.random_range(0..free.len())])
}

/// Places `config.pedestrian_count` pedestrians on distinct free cells at
/// least 1 m from `robot_start`, with uniform speeds and free-cell waypoints.
pub fn spawn_pedestrians(
    config: &SimConfig,
    map: &GridMap,
    robot_start: Vec2,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PedestrianState>, SimError> {
    if config.pedestrian_count == 0 {
        return Ok(Vec::new());
    }
    let free: Vec<Cell> = map.free_cells().collect();
    let eligible: Vec<Cell> = free
        .iter()
        .copied()
        .filter(|&c| map.cell_to_world(c).distance(robot_start) >= SPAWN_CLEARANCE)
        .collect();
    if eligible.len() < config.pedestrian_count {
        return Err(SimError::InsufficientFreeSpace {
            needed: config.pedestrian_count,
            available: eligible.len(),
        });
    }
    let picks = rand::seq::index::sample(rng, eligible.len(), config.pedestrian_count);
    let mut out = Vec::with_capacity(config.pedestrian_count);
    for (id, i) in picks.into_iter().enumerate() {
        let speed = rng.random_range(MIN_PEDESTRIAN_SPEED..=MAX_PEDESTRIAN_SPEED);
        let waypoint = random_free_point(map, &free, rng);
        let mut p = PedestrianState {
            id,
            position: map.cell_to_world(eligible[i]),
            velocity: Vec2::ZERO,
            radius: config.pedestrian_radius,
            waypoint,
            speed,
        };
        p.aim();
        out.push(p);
    }
    Ok(out)
}
