use std::collections::BTreeMap;
use std::convert::Infallible;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use errand_core::fsm::FsmError;
use errand_core::nlu::{
    interpret, CommandId, CommandSource, CommandText, Issue, NluError, TaskSpec, Translator,
};
use errand_core::sim::{LoadedScenario, SimError, World};
use errand_core::world::{Landmark, LandmarkDictionary, Vec2};

use crate::engine::Engine;

pub const TICK_PERIOD: Duration = Duration::from_millis(50);
pub const STREAM_PERIOD: Duration = Duration::from_millis(100);

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("scenario {path}: {source}")]
    Scenario { path: String, source: SimError },
    #[error("cannot list scenarios in {path}: {message}")]
    Catalog { path: String, message: String },
}

#[derive(Debug, Clone, Deserialize)]
pub struct ApiCommandRequest {
    pub text: String,
    #[serde(default)]
    pub client_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandAccepted {
    pub command_id: CommandId,
    pub task: TaskSpec,
    #[serde(default)]
    pub client_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    /// Machine-readable variant name, e.g. `UnknownLocation`.
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ResetRequest {
    pub scenario: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetResponse {
    pub scenario: String,
    pub tick: u64,
}

/// Occupancy grid and landmarks for drawing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapView {
    pub scenario: String,
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Vec2,
    /// Top row first; `#` occupied, `.` free.
    pub rows: Vec<String>,
    pub landmarks: Vec<Landmark>,
}

struct Session {
    dictionary: Arc<LandmarkDictionary>,
    map: MapView,
}

impl Session {
    fn new(loaded: &LoadedScenario) -> Self {
        let landmarks = loaded.dictionary.landmarks().to_vec();
        let map = &loaded.map;
        Session {
            dictionary: Arc::new(loaded.dictionary.clone()),
            map: MapView {
                scenario: loaded.name.clone(),
                width: map.width(),
                height: map.height(),
                resolution: map.resolution(),
                origin: map.origin(),
                rows: map.rows_top_down(),
                landmarks,
            },
        }
    }
}

/// Shared handler state.
#[derive(Clone)]
pub struct AppState {
    engine: Engine,
    translator: Arc<dyn Translator>,
    session: Arc<RwLock<Arc<Session>>>,
    /// Scenario name to file, for resets.
    catalog: Arc<BTreeMap<String, PathBuf>>,
    next_id: Arc<AtomicU64>,
    stream_period: Duration,
}

fn load(path: &Path) -> Result<(LoadedScenario, World), ServiceError> {
    let wrap = |source| ServiceError::Scenario {
        path: path.display().to_string(),
        source,
    };
    let loaded = LoadedScenario::load(path).map_err(wrap)?;
    let world = loaded
        .config()
        .and_then(|c| loaded.world(c))
        .map_err(wrap)?;
    Ok((loaded, world))
}

/// Every `.scenario` file next to `path`, keyed by file stem.
fn catalog(path: &Path) -> Result<BTreeMap<String, PathBuf>, ServiceError> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let err = |e: std::io::Error| ServiceError::Catalog {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(err)? {
        let p = entry.map_err(err)?.path();
        if p.extension().is_some_and(|e| e == "scenario") {
            if let Some(stem) = p.file_stem() {
                out.insert(stem.to_string_lossy().into_owned(), p);
            }
        }
    }
    Ok(out)
}

impl AppState {
    /// Loads `scenario`, starts its engine thread, and indexes its sibling
    /// scenarios for reset.
    pub fn start(scenario: &Path, translator: Arc<dyn Translator>) -> Result<Self, ServiceError> {
        Self::start_with(scenario, translator, TICK_PERIOD, STREAM_PERIOD)
    }

    pub fn start_with(
        scenario: &Path,
        translator: Arc<dyn Translator>,
        tick_period: Duration,
        stream_period: Duration,
    ) -> Result<Self, ServiceError> {
        let (loaded, world) = load(scenario)?;
        let mut catalog = catalog(scenario)?;
        catalog.insert(loaded.name.clone(), scenario.to_path_buf());
        let (engine, _thread) = Engine::spawn(world, tick_period);
        Ok(AppState {
            engine,
            translator,
            session: Arc::new(RwLock::new(Arc::new(Session::new(&loaded)))),
            catalog: Arc::new(catalog),
            next_id: Arc::new(AtomicU64::new(1)),
            stream_period,
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn scenario_names(&self) -> Vec<String> {
        self.catalog.keys().cloned().collect()
    }

    fn session(&self) -> Arc<Session> {
        self.session.read().expect("session lock").clone()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/commands", post(post_command))
        .route("/api/state", get(get_state))
        .route("/api/stream", get(get_stream))
        .route("/api/landmarks", get(get_landmarks))
        .route("/api/map", get(get_map))
        .route("/api/reset", post(post_reset))
        .with_state(state)
}

fn error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    (
        status,
        Json(ApiError {
            error: code.to_string(),
            message: message.into(),
        }),
    )
        .into_response()
}

fn nlu_error(e: NluError) -> Response {
    let status = match e {
        NluError::TranslatorUnavailable { .. } => StatusCode::SERVICE_UNAVAILABLE,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    };
    error(status, e.code(), e.to_string())
}

fn json_text(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn post_command(
    State(state): State<AppState>,
    body: Result<Json<ApiCommandRequest>, JsonRejection>,
) -> Response {
    let Json(request) = match body {
        Ok(b) => b,
        Err(e) => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                "InvalidRequest",
                e.body_text(),
            )
        }
    };
    let text = match CommandText::new(request.text, CommandSource::Api) {
        Ok(t) => t,
        Err(e) => return nlu_error(e),
    };
    let issue = Issue::new(
        CommandId::sequential(state.next_id.fetch_add(1, Ordering::Relaxed)),
        state.engine.latest().sim_time,
    );
    let translator = state.translator.clone();
    let dictionary = state.session().dictionary.clone();
    let parsed = tokio::task::spawn_blocking(move || {
        interpret(&text, translator.as_ref(), &dictionary, issue)
    })
    .await;
    let task = match parsed {
        Ok(Ok(task)) => task,
        Ok(Err(e)) => return nlu_error(e),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()),
    };
    match state.engine.submit(task.clone()).await {
        Some(Ok(())) => (
            StatusCode::ACCEPTED,
            Json(CommandAccepted {
                command_id: task.command_id.clone(),
                task,
                client_tag: request.client_tag,
            }),
        )
            .into_response(),
        Some(Err(e @ FsmError::QueueFull)) => {
            error(StatusCode::SERVICE_UNAVAILABLE, "QueueFull", e.to_string())
        }
        None => error(
            StatusCode::SERVICE_UNAVAILABLE,
            "EngineStopped",
            "simulation is not running",
        ),
    }
}

async fn get_state(State(state): State<AppState>) -> Response {
    json_text(serde_json::to_string(&*state.engine.latest()).expect("snapshots serialize"))
}

async fn get_stream(
    State(state): State<AppState>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let mut interval = tokio::time::interval(state.stream_period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let snapshots = state.engine.subscribe();
    Sse::new(stream::unfold(
        (interval, snapshots),
        |(mut interval, snapshots)| async move {
            interval.tick().await;
            let json = serde_json::to_string(&**snapshots.borrow()).expect("snapshots serialize");
            Some((Ok(Event::default().data(json)), (interval, snapshots)))
        },
    ))
}

async fn get_landmarks(State(state): State<AppState>) -> Json<Vec<Landmark>> {
    Json(state.session().map.landmarks.clone())
}

async fn get_map(State(state): State<AppState>) -> Json<MapView> {
    Json(state.session().map.clone())
}

async fn post_reset(
    State(state): State<AppState>,
    body: Result<Json<ResetRequest>, JsonRejection>,
) -> Response {
    let Json(request) = match body {
        Ok(b) => b,
        Err(e) => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                "InvalidRequest",
                e.body_text(),
            )
        }
    };
    let Some(path) = state.catalog.get(&request.scenario).cloned() else {
        return error(
            StatusCode::NOT_FOUND,
            "UnknownScenario",
            format!("no scenario named {:?}", request.scenario),
        );
    };
    let (loaded, world) = match tokio::task::spawn_blocking(move || load(&path)).await {
        Ok(Ok(pair)) => pair,
        Ok(Err(e)) => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                "ScenarioLoad",
                e.to_string(),
            )
        }
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()),
    };
    let session = Arc::new(Session::new(&loaded));
    match state.engine.reset(world).await {
        Some(snapshot) => {
            *state.session.write().expect("session lock") = session;
            Json(ResetResponse {
                scenario: loaded.name,
                tick: snapshot.tick,
            })
            .into_response()
        }
        None => error(
            StatusCode::SERVICE_UNAVAILABLE,
            "EngineStopped",
            "simulation is not running",
        ),
    }
}

/// Serves `state` on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
