use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fsm::{Effect, ExecutorStatus, FsmError, FsmEvent, FsmState};
use crate::nav::plan_cells;
use crate::nav::{
    arc_enters_obstacle, select_velocity_where, to_diff_drive, tracking_is_clear, NavError,
    ObservationSnapshot, Path, PathFollower, VelocityCommand,
};
use crate::nlu::{CommandId, Issue, TaskSpec};
use crate::world::{wrap_angle, Cell, GridMap, Pose2D, Vec2};

use super::pedestrians::{spawn_pedestrians, PedestrianState};
use super::{SimConfig, SimError};

const STOP_LOOKAHEAD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2D,
    pub command: VelocityCommand,
}

impl RobotState {
    /// World-frame velocity implied by the current command.
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_polar(self.command.linear, self.pose.heading)
    }
}

/// Contact onsets: a contact lasting several ticks counts once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CollisionCounts {
    pub static_obstacle: u64,
    pub pedestrian: u64,
}

impl CollisionCounts {
    pub fn total(&self) -> u64 {
        self.static_obstacle + self.pedestrian
    }
}

/// Everything an observer may see after a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub tick: u64,
    /// Always `tick as f64 * dt`.
    pub sim_time: f64,
    pub robot: RobotState,
    pub pedestrians: Vec<PedestrianState>,
    pub executor: ExecutorStatus,
    pub path: Option<Path>,
    pub path_cursor: usize,
    pub collisions_so_far: u64,
    pub collision_breakdown: CollisionCounts,
    pub emergency_stops_so_far: u64,
    /// The last tick's command was an emergency stop.
    pub emergency_stop: bool,
    /// Smallest robot-to-pedestrian surface gap seen so far; negative means contact.
    pub min_pedestrian_clearance: Option<f64>,
}

/// Events raised and effects applied by one tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickOutcome {
    pub events: Vec<FsmEvent>,
    pub effects: Vec<Effect>,
    pub emergency_stop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ActionTimer {
    started: u64,
    ticks: u64,
}

#[derive(Debug, Clone)]
pub struct World {
    config: SimConfig,
    map: GridMap,
    inflated: GridMap,
    free_cells: Vec<Cell>,
    rng: ChaCha8Rng,
    tick: u64,
    robot: RobotState,
    pedestrians: Vec<PedestrianState>,
    executor: ExecutorStatus,
    follower: Option<PathFollower>,
    last_plan: Option<u64>,
    action: Option<ActionTimer>,
    collisions: CollisionCounts,
    touching_static: bool,
    touching: Vec<bool>,
    stopped: bool,
    emergency_stops: u64,
    min_clearance: Option<f64>,
    issued: u64,
}

impl World {
    pub fn new(map: GridMap, start: Pose2D, config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let pedestrians = spawn_pedestrians(&config, &map, start.position(), &mut rng)?;
        let inflated = map.inflate(config.controller.robot_radius);
        let free_cells = map.free_cells().collect();
        Ok(Self {
            executor: ExecutorStatus::new(config.dwell),
            touching: vec![false; pedestrians.len()],
            config,
            map,
            inflated,
            free_cells,
            rng,
            tick: 0,
            robot: RobotState {
                pose: start,
                command: VelocityCommand::default(),
            },
            pedestrians,
            follower: None,
            last_plan: None,
            action: None,
            collisions: CollisionCounts::default(),
            touching_static: false,
            stopped: false,
            emergency_stops: 0,
            min_clearance: None,
            issued: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn inflated_map(&self) -> &GridMap {
        &self.inflated
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn sim_time(&self) -> f64 {
        self.tick as f64 * self.config.dt
    }

    pub fn robot(&self) -> RobotState {
        self.robot
    }

    pub fn pedestrians(&self) -> &[PedestrianState] {
        &self.pedestrians
    }

    pub fn executor(&self) -> &ExecutorStatus {
        &self.executor
    }

    pub fn collisions(&self) -> CollisionCounts {
        self.collisions
    }

    pub fn emergency_stops(&self) -> u64 {
        self.emergency_stops
    }

    pub fn min_pedestrian_clearance(&self) -> Option<f64> {
        self.min_clearance
    }

    /// No active task and nothing queued.
    pub fn is_quiescent(&self) -> bool {
        self.executor.state == FsmState::Idle && self.executor.queue.is_empty()
    }

    /// Next sequential command id, stamped with the current sim time.
    pub fn issue(&mut self) -> Issue {
        self.issued += 1;
        Issue::new(CommandId::sequential(self.issued), self.sim_time())
    }

    pub fn submit(&mut self, task: TaskSpec) -> Result<Vec<Effect>, FsmError> {
        let effects = self.executor.submit(task, self.sim_time())?;
        self.apply(&effects);
        Ok(effects)
    }

    pub fn abort(&mut self) -> Vec<Effect> {
        let effects = self.executor.step(FsmEvent::Abort, self.sim_time());
        self.apply(&effects);
        effects
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            tick: self.tick,
            sim_time: self.sim_time(),
            robot: self.robot,
            pedestrians: self.pedestrians.clone(),
            executor: self.executor.clone(),
            path: self.follower.as_ref().map(|f| f.path().clone()),
            path_cursor: self.follower.as_ref().map_or(0, PathFollower::cursor),
            collisions_so_far: self.collisions.total(),
            collision_breakdown: self.collisions,
            emergency_stops_so_far: self.emergency_stops,
            emergency_stop: self.stopped,
            min_pedestrian_clearance: self.min_clearance,
        }
    }

    fn apply(&mut self, effects: &[Effect]) {
        for effect in effects {
            match effect {
                Effect::SetGoal(_) | Effect::ClearGoal => {
                    self.follower = None;
                    self.last_plan = None;
                }
                Effect::StartAction { dwell, .. } => {
                    self.action = Some(ActionTimer {
                        started: self.tick,
                        ticks: self.config.ticks_for(*dwell),
                    });
                }
                _ => {}
            }
        }
        if !self.executor.state.is_acting() {
            self.action = None;
        }
    }

    /// Plans on the inflated grid. A start or goal inside the inflation band
    /// is moved to the nearest free cell first.
    fn plan(&self, goal: Vec2) -> Result<PathFollower, NavError> {
        let snap = |p: Vec2, err: NavError| {
            self.inflated
                .world_to_cell(p)
                .ok()
                .and_then(|c| self.inflated.nearest_free_cell(c))
                .ok_or(err)
        };
        let start = snap(self.robot.pose.position(), NavError::StartOccupied)?;
        let goal_cell = snap(goal, NavError::GoalOccupied)?;
        let mut path = plan_cells(&self.inflated, start, goal_cell)?;
        if self.inflated.world_to_cell(goal).ok() == Some(goal_cell) {
            if let Some(last) = path.waypoints.last_mut() {
                *last = goal;
            }
        }
        PathFollower::new(path)
    }

    fn preferred_velocity(&mut self) -> Vec2 {
        let here = self.robot.pose.position();
        let params = &self.config.controller;
        let sight = if self.inflated.is_occupied_at(here) {
            &self.map
        } else {
            &self.inflated
        };
        let target = if self.executor.goal().is_some() {
            self.follower
                .as_mut()
                .map(|f| f.next_visible_waypoint(self.robot.pose, params, sight))
        } else {
            self.executor
                .station()
                .filter(|s| s.distance(here) > self.config.arrival_tolerance)
        };
        let Some(target) = target else {
            return Vec2::ZERO;
        };
        let to = target - here;
        let d = to.norm();
        if d < 1e-9 {
            return Vec2::ZERO;
        }
        to * (params.v_max.min(d / self.config.dt) / d)
    }

    /// Advances the world by one `dt`.
    pub fn tick(&mut self) -> TickOutcome {
        let dt = self.config.dt;
        let mut out = TickOutcome::default();

        // (1) replan
        let mut failed = false;
        if let Some(goal) = self.executor.goal() {
            let period = self.config.ticks_for(self.config.replan_period);
            let due =
                self.follower.is_none() || self.last_plan.is_none_or(|t| self.tick - t >= period);
            if due {
                match self.plan(goal) {
                    Ok(follower) => {
                        self.follower = Some(follower);
                        self.last_plan = Some(self.tick);
                    }
                    Err(e) => {
                        self.follower = None;
                        out.events.push(FsmEvent::NavigationFailed(e.to_string()));
                        failed = true;
                    }
                }
            }
        }

        // (2) observe, (3) choose a command
        let preferred = if failed {
            Vec2::ZERO
        } else {
            self.preferred_velocity()
        };
        let params = &self.config.controller;
        let obs = ObservationSnapshot {
            robot: self.robot.pose,
            robot_velocity: self.robot.velocity(),
            pedestrians: self
                .pedestrians
                .iter()
                .map(PedestrianState::observed)
                .collect(),
            goal: self.executor.goal().unwrap_or(self.robot.pose.position()),
            map: &self.inflated,
        };
        // Inside the inflation band only the true obstacles are off limits.
        let guard = if self.inflated.is_occupied_at(self.robot.pose.position()) {
            &self.map
        } else {
            &self.inflated
        };
        let pose = self.robot.pose;
        let arc_clear = |v: Vec2| {
            !arc_enters_obstacle(
                guard,
                pose,
                to_diff_drive(v, pose, params),
                STOP_LOOKAHEAD,
                dt,
            )
        };
        // Candidates whose tracked unicycle rollout also stays clear are
        // preferred; the plain cone test is the fallback before an e-stop.
        let tracked = select_velocity_where(&obs, preferred, params, |v| {
            arc_clear(v) && tracking_is_clear(pose, v, &obs.pedestrians, params, dt)
        });
        let choice = if tracked.admissible {
            tracked
        } else {
            select_velocity_where(&obs, preferred, params, arc_clear)
        };
        let command = to_diff_drive(choice.velocity, pose, params);
        out.emergency_stop = !choice.admissible;
        if out.emergency_stop && !self.stopped {
            self.emergency_stops += 1;
        }
        self.stopped = out.emergency_stop;

        // (4) robot kinematics
        self.robot = RobotState {
            pose: Pose2D {
                x: pose.x + command.linear * pose.heading.cos() * dt,
                y: pose.y + command.linear * pose.heading.sin() * dt,
                heading: wrap_angle(pose.heading + command.angular * dt),
            },
            command,
        };

        // (5) pedestrians
        for p in &mut self.pedestrians {
            p.advance(&self.map, &self.free_cells, dt, &mut self.rng);
        }
        self.tick += 1;

        // (6) collisions
        let here = self.robot.pose.position();
        let on_obstacle = self.map.is_occupied_at(here);
        if on_obstacle && !self.touching_static {
            self.collisions.static_obstacle += 1;
        }
        self.touching_static = on_obstacle;
        for (p, touching) in self.pedestrians.iter().zip(self.touching.iter_mut()) {
            let gap = here.distance(p.position) - (params.robot_radius + p.radius);
            self.min_clearance = Some(self.min_clearance.map_or(gap, |m| m.min(gap)));
            let contact = gap < 0.0;
            if contact && !*touching {
                self.collisions.pedestrian += 1;
            }
            *touching = contact;
        }

        // (7) arrival and dwell events
        if !failed {
            if let Some(goal) = self.executor.goal() {
                if here.distance(goal) <= self.config.arrival_tolerance {
                    out.events.push(FsmEvent::ArrivedAtGoal);
                }
            }
            if let Some(timer) = self.action {
                if self.tick - timer.started >= timer.ticks {
                    self.action = None;
                    out.events.push(FsmEvent::ActionComplete);
                }
            }
        }

        // (8) executor
        let now = self.sim_time();
        for event in &out.events {
            let effects = self.executor.step(event.clone(), now);
            self.apply(&effects);
            out.effects.extend(effects);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlu::{CommandSource, CommandText, MockTranslator};
    use crate::world::LandmarkDictionary;

    fn open_world(pedestrians: usize) -> (World, LandmarkDictionary) {
        let map = GridMap::empty(40, 40, 0.25, Vec2::ZERO).unwrap();
        let dict =
            LandmarkDictionary::parse("mail room,,1.125,1.125\ndames office,,8.875,8.875\n", &map)
                .unwrap();
        let config = SimConfig {
            pedestrian_count: pedestrians,
            seed: 11,
            ..Default::default()
        };
        (
            World::new(map, Pose2D::new(5.0, 1.0, 0.0), config).unwrap(),
            dict,
        )
    }

    fn task(world: &mut World, dict: &LandmarkDictionary) -> TaskSpec {
        let text = CommandText::new(
            "take envelopes from mail room to dames office",
            CommandSource::Cli,
        )
        .unwrap();
        crate::nlu::interpret(&text, &MockTranslator, dict, world.issue()).unwrap()
    }

    #[test]
    fn idle_world_stays_put() {
        let (mut w, _) = open_world(0);
        let before = w.snapshot();
        w.tick();
        let after = w.snapshot();
        assert_eq!(after.tick, 1);
        assert_eq!(after.robot.pose, before.robot.pose);
        assert_eq!(after.executor, before.executor);
        assert_eq!(after.sim_time, 0.05);
    }

    #[test]
    fn arrival_threshold() {
        let map = GridMap::empty(40, 40, 0.25, Vec2::ZERO).unwrap();
        let dict = LandmarkDictionary::parse("alpha,,5.29,5\nbeta,,8,8\n", &map).unwrap();
        let mut w = World::new(
            map,
            Pose2D::new(5.0, 5.0, std::f64::consts::PI),
            SimConfig::default(),
        )
        .unwrap();
        let issue = w.issue();
        let text = CommandText::new("bring keys from alpha to beta", CommandSource::Cli).unwrap();
        w.submit(crate::nlu::interpret(&text, &MockTranslator, &dict, issue).unwrap())
            .unwrap();
        let out = w.tick();
        assert_eq!(out.events, vec![FsmEvent::ArrivedAtGoal]);
        assert_eq!(w.executor().state, FsmState::PickingUpItem);
    }

    #[test]
    fn completes_task_in_open_space() {
        let (mut w, dict) = open_world(0);
        let t = task(&mut w, &dict);
        w.submit(t).unwrap();
        let mut dwell_started = None;
        for _ in 0..4000 {
            let before = w.executor().state;
            let out = w.tick();
            if out.events.contains(&FsmEvent::ArrivedAtGoal)
                && before == FsmState::NavigatingToPickup
            {
                dwell_started = Some(w.sim_time());
            }
            if out.events.contains(&FsmEvent::ActionComplete) && before == FsmState::PickingUpItem {
                assert!(w.sim_time() - dwell_started.unwrap() >= 2.0 - 1e-9);
            }
            if w.is_quiescent() {
                break;
            }
        }
        assert_eq!(w.executor().completed, vec![CommandId::sequential(1)]);
        assert_eq!(w.collisions().total(), 0);
    }

    #[test]
    fn unreachable_goal_fails_task() {
        let mut map = GridMap::empty(40, 40, 0.25, Vec2::ZERO).unwrap();
        for col in 0..40 {
            map.set_occupied(Cell::new(col, 20), true);
        }
        let dict = LandmarkDictionary::parse("alpha,,1.125,8.875\nbeta,,2,2\n", &map).unwrap();
        let mut w = World::new(map, Pose2D::new(1.0, 1.0, 0.0), SimConfig::default()).unwrap();
        let issue = w.issue();
        let text = CommandText::new("bring keys from alpha to beta", CommandSource::Cli).unwrap();
        w.submit(crate::nlu::interpret(&text, &MockTranslator, &dict, issue).unwrap())
            .unwrap();
        let out = w.tick();
        assert!(matches!(
            out.events.as_slice(),
            [FsmEvent::NavigationFailed(_)]
        ));
        assert_eq!(w.executor().state, FsmState::Idle);
        assert_eq!(w.executor().failed.len(), 1);
    }

    #[test]
    fn same_seed_same_stream() {
        let run = || {
            let (mut w, dict) = open_world(4);
            let t = task(&mut w, &dict);
            w.submit(t).unwrap();
            (0..300)
                .map(|_| {
                    w.tick();
                    serde_json::to_string(&w.snapshot()).unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn snapshot_json_round_trip() {
        let (mut w, dict) = open_world(3);
        let t = task(&mut w, &dict);
        w.submit(t).unwrap();
        for _ in 0..50 {
            w.tick();
        }
        let snap = w.snapshot();
        let back: WorldSnapshot =
            serde_json::from_str(&serde_json::to_string(&snap).unwrap()).unwrap();
        assert_eq!(back, snap);
    }
}
