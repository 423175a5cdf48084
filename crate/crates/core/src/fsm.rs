//! Sequential pick-and-delivery executor.
//!
//! Five states driven by arrival and action-completion events, with a FIFO
//! queue of pending tasks. The executor itself never touches the world; it
//! returns [`Effect`]s for the simulation to carry out.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nlu::{CommandId, TaskSpec};
use crate::world::Vec2;

pub const QUEUE_LIMIT: usize = 32;
pub const HISTORY_LIMIT: usize = 256;
pub const DEFAULT_DWELL: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FsmState {
    Idle,
    NavigatingToPickup,
    PickingUpItem,
    NavigatingToDelivery,
    DeliveringItem,
}

impl FsmState {
    pub const ALL: [FsmState; 5] = [
        FsmState::Idle,
        FsmState::NavigatingToPickup,
        FsmState::PickingUpItem,
        FsmState::NavigatingToDelivery,
        FsmState::DeliveringItem,
    ];

    pub fn is_navigating(self) -> bool {
        matches!(
            self,
            FsmState::NavigatingToPickup | FsmState::NavigatingToDelivery
        )
    }

    pub fn is_acting(self) -> bool {
        matches!(self, FsmState::PickingUpItem | FsmState::DeliveringItem)
    }
}

impl fmt::Display for FsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FsmEvent {
    NewTask(TaskSpec),
    ArrivedAtGoal,
    ActionComplete,
    Abort,
    NavigationFailed(String),
}

impl fmt::Display for FsmEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FsmEvent::NewTask(t) => write!(f, "NewTask({})", t.command_id),
            FsmEvent::ArrivedAtGoal => f.write_str("ArrivedAtGoal"),
            FsmEvent::ActionComplete => f.write_str("ActionComplete"),
            FsmEvent::Abort => f.write_str("Abort"),
            FsmEvent::NavigationFailed(reason) => write!(f, "NavigationFailed({reason})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Pickup,
    Deliver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    SetGoal(Vec2),
    ClearGoal,
    StartAction {
        kind: ActionKind,
        dwell: f64,
    },
    ClearCarried,
    TaskCompleted(CommandId),
    TaskFailed {
        command_id: CommandId,
        reason: String,
    },
    Queued(CommandId),
    Warning(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub at: f64,
    /// State after the event was handled.
    pub state: FsmState,
    pub event: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedTask {
    pub command_id: CommandId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FsmError {
    #[error("task queue is full ({QUEUE_LIMIT} pending)")]
    QueueFull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutorStatus {
    pub state: FsmState,
    pub active_task: Option<TaskSpec>,
    pub queue: VecDeque<TaskSpec>,
    pub carried_item: Option<String>,
    /// Most recent transitions, oldest first, capped at [`HISTORY_LIMIT`].
    pub history: VecDeque<HistoryEntry>,
    /// Completed command ids in completion order.
    pub completed: Vec<CommandId>,
    pub failed: Vec<FailedTask>,
    /// Seconds each pickup/delivery action takes.
    pub dwell: f64,
}

impl Default for ExecutorStatus {
    fn default() -> Self {
        Self::new(DEFAULT_DWELL)
    }
}

impl ExecutorStatus {
    pub fn new(dwell: f64) -> Self {
        Self {
            state: FsmState::Idle,
            active_task: None,
            queue: VecDeque::new(),
            carried_item: None,
            history: VecDeque::new(),
            completed: Vec::new(),
            failed: Vec::new(),
            dwell,
        }
    }

    /// Hands a task to the executor: starts it when idle, queues it otherwise.
    pub fn submit(&mut self, task: TaskSpec, at: f64) -> Result<Vec<Effect>, FsmError> {
        if self.queue.len() >= QUEUE_LIMIT {
            return Err(FsmError::QueueFull);
        }
        Ok(self.step(FsmEvent::NewTask(task), at))
    }

    /// Where the robot should be heading, if anywhere.
    pub fn goal(&self) -> Option<Vec2> {
        let task = self.active_task.as_ref()?;
        match self.state {
            FsmState::NavigatingToPickup => Some(task.pickup.position()),
            FsmState::NavigatingToDelivery => Some(task.delivery.position()),
            _ => None,
        }
    }

    /// Landmark the robot should hold position at while acting.
    pub fn station(&self) -> Option<Vec2> {
        let task = self.active_task.as_ref()?;
        match self.state {
            FsmState::PickingUpItem => Some(task.pickup.position()),
            FsmState::DeliveringItem => Some(task.delivery.position()),
            _ => None,
        }
    }

    fn begin(&mut self, task: TaskSpec, effects: &mut Vec<Effect>) {
        effects.push(Effect::SetGoal(task.pickup.position()));
        self.active_task = Some(task);
        self.state = FsmState::NavigatingToPickup;
    }

    fn finish_active(&mut self, effects: &mut Vec<Effect>) {
        self.carried_item = None;
        effects.push(Effect::ClearCarried);
        match self.queue.pop_front() {
            Some(next) => self.begin(next, effects),
            None => {
                self.active_task = None;
                self.state = FsmState::Idle;
                effects.push(Effect::ClearGoal);
            }
        }
    }

    fn stop(&mut self, reason: &str, effects: &mut Vec<Effect>) {
        if let Some(task) = self.active_task.take() {
            self.failed.push(FailedTask {
                command_id: task.command_id.clone(),
                reason: reason.to_string(),
            });
            effects.push(Effect::TaskFailed {
                command_id: task.command_id,
                reason: reason.to_string(),
            });
        }
        self.carried_item = None;
        self.state = FsmState::Idle;
        effects.push(Effect::ClearCarried);
        effects.push(Effect::ClearGoal);
    }

    /// Applies one event. Pairs outside the transition table leave the state
    /// unchanged and yield a [`Effect::Warning`].
    pub fn step(&mut self, event: FsmEvent, at: f64) -> Vec<Effect> {
        let label = event.to_string();
        let mut effects = Vec::new();
        match (self.state, event) {
            (FsmState::Idle, FsmEvent::NewTask(task)) => match self.queue.pop_front() {
                // Tasks left over from an abort or failure run first.
                Some(head) => {
                    effects.push(Effect::Queued(task.command_id.clone()));
                    self.queue.push_back(task);
                    self.begin(head, &mut effects);
                }
                None => self.begin(task, &mut effects),
            },
            (_, FsmEvent::NewTask(task)) => {
                if self.queue.len() >= QUEUE_LIMIT {
                    effects.push(Effect::Warning(format!(
                        "queue full; dropped {}",
                        task.command_id
                    )));
                } else {
                    effects.push(Effect::Queued(task.command_id.clone()));
                    self.queue.push_back(task);
                }
            }
            (FsmState::NavigatingToPickup, FsmEvent::ArrivedAtGoal) => {
                self.state = FsmState::PickingUpItem;
                effects.push(Effect::StartAction {
                    kind: ActionKind::Pickup,
                    dwell: self.dwell,
                });
            }
            (FsmState::PickingUpItem, FsmEvent::ActionComplete) => {
                let task = self
                    .active_task
                    .as_ref()
                    .expect("acting states have a task");
                self.carried_item = Some(task.item.clone());
                effects.push(Effect::SetGoal(task.delivery.position()));
                self.state = FsmState::NavigatingToDelivery;
            }
            (FsmState::NavigatingToDelivery, FsmEvent::ArrivedAtGoal) => {
                self.state = FsmState::DeliveringItem;
                effects.push(Effect::StartAction {
                    kind: ActionKind::Deliver,
                    dwell: self.dwell,
                });
            }
            (FsmState::DeliveringItem, FsmEvent::ActionComplete) => {
                let task = self
                    .active_task
                    .as_ref()
                    .expect("acting states have a task");
                self.completed.push(task.command_id.clone());
                effects.push(Effect::TaskCompleted(task.command_id.clone()));
                self.finish_active(&mut effects);
            }
            (_, FsmEvent::Abort) => self.stop("aborted", &mut effects),
            (_, FsmEvent::NavigationFailed(reason)) => self.stop(&reason, &mut effects),
            (state, event) => {
                let msg = format!("ignored {event} in state {state}");
                log::warn!("{msg}");
                effects.push(Effect::Warning(msg));
            }
        }
        self.history.push_back(HistoryEntry {
            at,
            state: self.state,
            event: label,
        });
        while self.history.len() > HISTORY_LIMIT {
            self.history.pop_front();
        }
        debug_assert!(
            self.invariants_hold(),
            "executor invariants violated: {self:?}"
        );
        effects
    }

    /// `carried_item` is set exactly while carrying, and a task is active
    /// exactly when not idle.
    pub fn invariants_hold(&self) -> bool {
        let carrying = matches!(
            self.state,
            FsmState::NavigatingToDelivery | FsmState::DeliveringItem
        );
        let carried_ok = self.carried_item.as_ref().is_some_and(|s| !s.is_empty()) == carrying;
        let active_ok = self.active_task.is_some() == (self.state != FsmState::Idle);
        carried_ok && active_ok && self.queue.len() <= QUEUE_LIMIT
    }
}

/// Free-function form of [`ExecutorStatus::goal`].
pub fn goal_of(status: &ExecutorStatus) -> Option<Vec2> {
    status.goal()
}
