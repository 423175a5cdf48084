use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::fsm::{Effect, FailedTask};
use crate::nlu::{interpret, CommandId, CommandSource, CommandText, NluError, Translator};

use super::{LoadedScenario, SimConfig, SimError, WorldSnapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTiming {
    pub command_id: CommandId,
    /// From issue to delivery completion, simulation seconds.
    pub seconds: f64,
}

/// A scripted command that never reached the executor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedCommand {
    pub at: f64,
    pub text: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub ticks: u64,
    pub sim_time: f64,
    pub tasks_submitted: usize,
    pub tasks_completed: usize,
    pub tasks_failed: usize,
    pub collisions: u64,
    pub static_collisions: u64,
    pub pedestrian_collisions: u64,
    pub emergency_stops: u64,
    pub sim_time_per_task: Vec<TaskTiming>,
    pub min_pedestrian_clearance: Option<f64>,
    /// Completed command ids in completion order.
    pub ordering: Vec<CommandId>,
    pub submission_order: Vec<CommandId>,
    /// Completions happened in the order the tasks were submitted.
    pub in_submission_order: bool,
    pub failed: Vec<FailedTask>,
    pub rejected: Vec<RejectedCommand>,
    /// The run hit the tick or sim-time limit with work outstanding.
    pub truncated: bool,
}

/// [`run_scripted_with`] without an observer.
pub fn run_scripted(
    scenario: &LoadedScenario,
    config: &SimConfig,
    translator: &dyn Translator,
    max_ticks: Option<u64>,
) -> Result<MetricsReport, SimError> {
    run_scripted_with(scenario, config, translator, max_ticks, |_| {})
}

/// Runs `scenario` headlessly until every scripted command has been injected
/// and the executor is idle, or a limit is hit. `observe` sees the initial
/// snapshot and the snapshot after every tick.
pub fn run_scripted_with(
    scenario: &LoadedScenario,
    config: &SimConfig,
    translator: &dyn Translator,
    max_ticks: Option<u64>,
    mut observe: impl FnMut(&WorldSnapshot),
) -> Result<MetricsReport, SimError> {
    let mut world = scenario.world(config.clone())?;
    let mut script = scenario.scenario.commands.clone();
    script.sort_by(|a, b| a.at.total_cmp(&b.at));
    let mut script = script.into_iter().peekable();

    let mut issued_at: HashMap<CommandId, f64> = HashMap::new();
    let mut submission_order = Vec::new();
    let mut rejected = Vec::new();
    let mut timings = Vec::new();
    let tick_limit = max_ticks.unwrap_or(u64::MAX);

    observe(&world.snapshot());
    let truncated = loop {
        while let Some(cmd) = script.next_if(|c| c.at <= world.sim_time() + 1e-9) {
            let issue = world.issue();
            let parsed = CommandText::new(&cmd.text, CommandSource::Cli)
                .and_then(|text| interpret(&text, translator, &scenario.dictionary, issue));
            let outcome = parsed
                .map_err(|e: NluError| e.to_string())
                .and_then(|task| {
                    let id = task.command_id.clone();
                    let at = task.issued_at;
                    world.submit(task).map_err(|e| e.to_string())?;
                    Ok((id, at))
                });
            match outcome {
                Ok((id, at)) => {
                    issued_at.insert(id.clone(), at);
                    submission_order.push(id);
                }
                Err(error) => rejected.push(RejectedCommand {
                    at: cmd.at,
                    text: cmd.text,
                    error,
                }),
            }
        }
        if script.peek().is_none() && world.is_quiescent() {
            break false;
        }
        if world.tick_count() >= tick_limit || world.sim_time() >= config.max_sim_time {
            break true;
        }
        let out = world.tick();
        for effect in &out.effects {
            if let Effect::TaskCompleted(id) = effect {
                timings.push(TaskTiming {
                    command_id: id.clone(),
                    seconds: world.sim_time() - issued_at.get(id).copied().unwrap_or(0.0),
                });
            }
        }
        observe(&world.snapshot());
    };

    let executor = world.executor();
    let ordering = executor.completed.clone();
    let expected: Vec<&CommandId> = submission_order
        .iter()
        .filter(|id| ordering.contains(id))
        .collect();
    let collisions = world.collisions();
    Ok(MetricsReport {
        scenario: scenario.name.clone(),
        seed: config.seed,
        ticks: world.tick_count(),
        sim_time: world.sim_time(),
        tasks_submitted: submission_order.len(),
        tasks_completed: ordering.len(),
        tasks_failed: executor.failed.len(),
        collisions: collisions.total(),
        static_collisions: collisions.static_obstacle,
        pedestrian_collisions: collisions.pedestrian,
        emergency_stops: world.emergency_stops(),
        sim_time_per_task: timings,
        min_pedestrian_clearance: world.min_pedestrian_clearance(),
        in_submission_order: expected.iter().copied().eq(ordering.iter()),
        ordering,
        submission_order,
        failed: executor.failed.clone(),
        rejected,
        truncated,
    })
}
