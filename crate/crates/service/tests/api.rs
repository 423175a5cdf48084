use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

use errand_core::corpus::parse_corpus;
use errand_core::nlu::{interpret, CommandId, CommandSource, CommandText, Issue, MockTranslator};
use errand_core::sim::{LoadedScenario, WorldSnapshot};
use errand_core::world::Landmark;
use errand_service::{router, ApiError, AppState, CommandAccepted, MapView, ResetResponse};

/// Effectively frozen: the world never ticks during a test.
const FROZEN: Duration = Duration::from_secs(3600);

fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets")
        .join(name)
}

fn state(scenario: &str, tick: Duration) -> AppState {
    AppState::start_with(
        &asset(scenario),
        Arc::new(MockTranslator),
        tick,
        errand_service::STREAM_PERIOD,
    )
    .unwrap()
}

fn app(scenario: &str) -> Router {
    router(state(scenario, FROZEN))
}

fn post(uri: &str, body: &str) -> Request<Body> {
    Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (
        status,
        res.into_body().collect().await.unwrap().to_bytes().to_vec(),
    )
}

async fn command(app: &Router, text: &str) -> (StatusCode, Vec<u8>) {
    call(
        app,
        post(
            "/api/commands",
            &serde_json::json!({ "text": text }).to_string(),
        ),
    )
    .await
}

#[tokio::test]
async fn accepted_command_echoes_the_task() {
    let app = app("office.scenario");
    let (status, body) = command(&app, "bring the keys from security to trail").await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let accepted: CommandAccepted = serde_json::from_slice(&body).unwrap();
    assert_eq!(accepted.task.pickup.name(), "security");
    assert_eq!(accepted.task.delivery.name(), "trail");
    assert_eq!(accepted.command_id, accepted.task.command_id);

    let (_, body) = call(&app, get("/api/state")).await;
    let snapshot: WorldSnapshot = serde_json::from_slice(&body).unwrap();
    let queued = snapshot
        .executor
        .active_task
        .iter()
        .chain(&snapshot.executor.queue);
    assert!(queued.into_iter().any(|t| *t == accepted.task));
}

#[tokio::test]
async fn rejected_commands_name_the_error() {
    let app = app("office.scenario");
    for (text, code) in [
        ("", "EmptyCommand"),
        ("bring keys from atlantis to trail", "UnknownLocation"),
    ] {
        let (status, body) = command(&app, text).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{text:?}");
        let err: ApiError = serde_json::from_slice(&body).unwrap();
        assert_eq!(err.error, code);
    }
    let (status, body) = call(&app, post("/api/commands", r#"{"words":"hi"}"#)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(
        serde_json::from_slice::<ApiError>(&body).unwrap().error,
        "InvalidRequest"
    );
}

#[tokio::test]
async fn service_adds_no_parsing_behavior() {
    let app = app("office.scenario");
    let loaded = LoadedScenario::load(asset("office.scenario")).unwrap();
    let corpus = parse_corpus(&std::fs::read_to_string(asset("commands.corpus")).unwrap()).unwrap();
    let extra = ["", "hello robot", "bring keys from atlantis to trail"];
    let texts = corpus.iter().map(|e| e.command.as_str()).chain(extra);
    let mut next_id = 1;
    for text in texts.take(32) {
        let (status, body) = command(&app, text).await;
        let direct = CommandText::new(text, CommandSource::Api).and_then(|t| {
            interpret(
                &t,
                &MockTranslator,
                &loaded.dictionary,
                Issue::new(CommandId::sequential(next_id), 0.0),
            )
        });
        match direct {
            Ok(task) => {
                next_id += 1;
                assert_eq!(status, StatusCode::ACCEPTED, "{text:?}");
                let accepted: CommandAccepted = serde_json::from_slice(&body).unwrap();
                assert_eq!(accepted.task, task, "{text:?}");
            }
            Err(e) => {
                // Rejected commands still consume an id on the service side.
                next_id += u64::from(!matches!(e, errand_core::nlu::NluError::EmptyCommand));
                assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{text:?}");
                let err: ApiError = serde_json::from_slice(&body).unwrap();
                assert_eq!(err.error, e.code());
            }
        }
    }
}

#[tokio::test]
async fn full_queue_is_unavailable() {
    let app = app("office.scenario");
    let mut last = StatusCode::ACCEPTED;
    for _ in 0..64 {
        last = command(&app, "bring the keys from security to trail")
            .await
            .0;
        if last != StatusCode::ACCEPTED {
            break;
        }
    }
    assert_eq!(last, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn fresh_world_is_idle_at_tick_zero() {
    let (status, body) = call(&app("office.scenario"), get("/api/state")).await;
    assert_eq!(status, StatusCode::OK);
    let json: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(json["tick"], 0);
    assert_eq!(json["executor"]["state"], "Idle");
}

#[tokio::test]
async fn published_snapshots_round_trip() {
    let app = router(state("lobby.scenario", Duration::from_millis(1)));
    command(&app, "bring the keys from security to trail").await;
    let mut seen = Vec::new();
    while seen.len() < 20 {
        let (_, body) = call(&app, get("/api/state")).await;
        let snapshot: WorldSnapshot = serde_json::from_slice(&body).unwrap();
        assert_eq!(serde_json::to_vec(&snapshot).unwrap(), body);
        if seen.last() != Some(&snapshot.tick) {
            seen.push(snapshot.tick);
        }
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
    assert!(seen.windows(2).all(|w| w[0] < w[1]));
}

#[tokio::test]
async fn stream_runs_at_ten_hertz() {
    let app = router(state("office.scenario", errand_service::TICK_PERIOD));
    let res = app.oneshot(get("/api/stream")).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    assert_eq!(res.headers()[header::CONTENT_TYPE], "text/event-stream");
    let mut body = res.into_body();
    let mut text = String::new();
    let deadline = Instant::now() + Duration::from_secs(1);
    while let Some(left) = deadline.checked_duration_since(Instant::now()) {
        match tokio::time::timeout(left, body.frame()).await {
            Ok(Some(frame)) => {
                if let Ok(data) = frame.unwrap().into_data() {
                    text.push_str(std::str::from_utf8(&data).unwrap());
                }
            }
            Ok(None) | Err(_) => break,
        }
    }
    let frames: Vec<&str> = text.split_terminator("\n\n").collect();
    assert!((9..=11).contains(&frames.len()), "{} frames", frames.len());
    for frame in frames {
        let json = frame.strip_prefix("data: ").expect("data frame");
        serde_json::from_str::<WorldSnapshot>(json).unwrap();
    }
}

#[tokio::test]
async fn landmarks_and_map_describe_the_scenario() {
    let app = app("office.scenario");
    let loaded = LoadedScenario::load(asset("office.scenario")).unwrap();
    let (_, body) = call(&app, get("/api/landmarks")).await;
    let landmarks: Vec<Landmark> = serde_json::from_slice(&body).unwrap();
    assert_eq!(landmarks, loaded.dictionary.landmarks());

    let (_, body) = call(&app, get("/api/map")).await;
    let map: MapView = serde_json::from_slice(&body).unwrap();
    assert_eq!(
        (map.width, map.height),
        (loaded.map.width(), loaded.map.height())
    );
    assert_eq!(map.rows, loaded.map.rows_top_down());
    assert_eq!(map.landmarks, landmarks);
}

#[tokio::test]
async fn reset_switches_scenarios() {
    let app = app("office.scenario");
    let (status, body) = call(&app, post("/api/reset", r#"{"scenario":"nonexistent"}"#)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(
        serde_json::from_slice::<ApiError>(&body).unwrap().error,
        "UnknownScenario"
    );

    command(&app, "bring the keys from security to trail").await;
    let (status, body) = call(&app, post("/api/reset", r#"{"scenario":"lobby"}"#)).await;
    assert_eq!(status, StatusCode::OK);
    let reset: ResetResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!((reset.scenario.as_str(), reset.tick), ("lobby", 0));

    let (_, body) = call(&app, get("/api/state")).await;
    let snapshot: WorldSnapshot = serde_json::from_slice(&body).unwrap();
    assert!(snapshot.executor.active_task.is_none() && snapshot.executor.queue.is_empty());
    let (_, body) = call(&app, get("/api/map")).await;
    let map: MapView = serde_json::from_slice(&body).unwrap();
    assert_eq!(map.scenario, "lobby");
}
