//! The thread that owns the world. Everything else talks to it through the
//! request channel and reads the snapshots it publishes.

use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tokio::sync::{oneshot, watch};

use errand_core::fsm::FsmError;
use errand_core::nlu::TaskSpec;
use errand_core::sim::{World, WorldSnapshot};

pub enum Request {
    Submit {
        task: TaskSpec,
        reply: oneshot::Sender<Result<(), FsmError>>,
    },
    /// Replaces the world; the reply carries the new world's first snapshot.
    Reset {
        world: Box<World>,
        reply: oneshot::Sender<Arc<WorldSnapshot>>,
    },
}

/// Handle to a running engine thread. The thread stops once every handle
/// and snapshot receiver is gone.
#[derive(Clone)]
pub struct Engine {
    requests: mpsc::Sender<Request>,
    snapshots: watch::Receiver<Arc<WorldSnapshot>>,
}

impl Engine {
    /// Starts ticking `world` once per `period` of wall-clock time.
    pub fn spawn(world: World, period: Duration) -> (Engine, JoinHandle<()>) {
        let (requests, inbox) = mpsc::channel();
        let (publish, snapshots) = watch::channel(Arc::new(world.snapshot()));
        let handle = thread::Builder::new()
            .name("errand-sim".into())
            .spawn(move || run(world, period, inbox, publish))
            .expect("spawning the simulation thread");
        (
            Engine {
                requests,
                snapshots,
            },
            handle,
        )
    }

    pub fn latest(&self) -> Arc<WorldSnapshot> {
        self.snapshots.borrow().clone()
    }

    pub fn subscribe(&self) -> watch::Receiver<Arc<WorldSnapshot>> {
        self.snapshots.clone()
    }

    /// `None` when the engine thread has stopped.
    pub async fn submit(&self, task: TaskSpec) -> Option<Result<(), FsmError>> {
        let (reply, answer) = oneshot::channel();
        self.requests.send(Request::Submit { task, reply }).ok()?;
        answer.await.ok()
    }

    pub async fn reset(&self, world: World) -> Option<Arc<WorldSnapshot>> {
        let (reply, answer) = oneshot::channel();
        self.requests
            .send(Request::Reset {
                world: Box::new(world),
                reply,
            })
            .ok()?;
        answer.await.ok()
    }
}

fn run(
    mut world: World,
    period: Duration,
    inbox: mpsc::Receiver<Request>,
    publish: watch::Sender<Arc<WorldSnapshot>>,
) {
    let mut next = Instant::now() + period;
    loop {
        // Requests are served as they arrive, between ticks.
        let wait = next.saturating_duration_since(Instant::now());
        match inbox.recv_timeout(wait) {
            Ok(Request::Submit { task, reply }) => {
                let outcome = world.submit(task).map(|_| ());
                if outcome.is_ok() {
                    // Observers see the queued task without waiting a tick.
                    publish.send_replace(Arc::new(world.snapshot()));
                }
                let _ = reply.send(outcome);
                continue;
            }
            Ok(Request::Reset {
                world: fresh,
                reply,
            }) => {
                world = *fresh;
                let snapshot = Arc::new(world.snapshot());
                publish.send_replace(snapshot.clone());
                let _ = reply.send(snapshot);
                next = Instant::now() + period;
                continue;
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => return,
        }
        world.tick();
        if publish.send(Arc::new(world.snapshot())).is_err() {
            return;
        }
        // A stalled thread resumes at the normal rate instead of catching up.
        next = (next + period).max(Instant::now());
    }
}
