use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

use handwash_cli::server::{router, EventKind, ServeOptions, Service, StatusEvent};
use handwash_core::engine::{ComplianceConfig, EngineState, EpisodeReport, Verdict};
use handwash_core::monitor::{SourceSpec, SyntheticEpisodeSpec};
use handwash_core::pipeline::ClassifierSpec;
use handwash_core::MovementClass::{self, *};

fn full_wash() -> SyntheticEpisodeSpec {
    let mut pairs: Vec<(MovementClass, f64)> = [PalmToPalm, PalmOverDorsum, FingersInterlaced, BackOfFingers, ThumbRub, FingertipsToPalm]
        .into_iter()
        .map(|m| (m, 8.0))
        .collect();
    pairs.push((FaucetWithTowel, 2.5));
    pairs.push((Idle, 4.0));
    let mut spec = SyntheticEpisodeSpec::from_pairs(&pairs);
    spec.episode_id = "sink".into();
    spec
}

fn service(source: SourceSpec, classifier: ClassifierSpec, speed: f64) -> (Service, Router) {
    let svc = Service::new(ServeOptions {
        source,
        classifier,
        config: ComplianceConfig::default(),
        output_dir: None,
        speed,
    })
    .unwrap();
    let app = router(svc.clone());
    (svc, app)
}

fn synthetic_service(speed: f64) -> (Service, Router) {
    service(SourceSpec::Synthetic { spec: full_wash() }, ClassifierSpec::replay(0.0, 0), speed)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, serde_json::Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

/// Reads server-sent events until `stop` accepts one, or a timeout.
async fn collect_events(body: Body, stop: impl Fn(&StatusEvent) -> bool) -> Vec<StatusEvent> {
    let mut body = body;
    let mut buf = String::new();
    let mut events = Vec::new();
    let read = async {
        while let Some(frame) = body.frame().await {
            let frame = frame.unwrap();
            let Ok(data) = frame.into_data() else { continue };
            buf.push_str(std::str::from_utf8(&data).unwrap());
            while let Some(end) = buf.find("\n\n") {
                let block: String = buf.drain(..end + 2).collect();
                for line in block.lines() {
                    if let Some(json) = line.strip_prefix("data:") {
                        let ev: StatusEvent = serde_json::from_str(json.trim_start()).unwrap();
                        let done = stop(&ev);
                        events.push(ev);
                        if done {
                            return;
                        }
                    }
                }
            }
        }
    };
    tokio::time::timeout(Duration::from_secs(60), read).await.expect("events arrive in time");
    events
}

async fn open_events(app: &Router) -> Body {
    let res = app
        .clone()
        .oneshot(Request::get("/events").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    assert_eq!(res.headers()["content-type"], "text/event-stream");
    res.into_body()
}

#[tokio::test]
async fn status_while_waiting() {
    let (_svc, app) = synthetic_service(0.0);
    let (code, body) = call(&app, "GET", "/status", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(body, serde_json::json!({"washing": false, "movement": 0}));
    let (code, _) = call(&app, "GET", "/report/latest", None).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn event_stream_follows_the_state_machine() {
    let (svc, app) = synthetic_service(0.0);
    let body = open_events(&app).await;
    let (code, _) = call(&app, "POST", "/run", None).await;
    assert_eq!(code, StatusCode::ACCEPTED);

    let events = collect_events(body, |e| e.kind == EventKind::StateChange && e.snapshot.state == EngineState::Waiting).await;
    let trace: Vec<(EventKind, EngineState)> = events
        .iter()
        .filter(|e| e.kind != EventKind::Progress)
        .map(|e| (e.kind, e.snapshot.state))
        .collect();
    assert_eq!(
        trace,
        vec![
            (EventKind::StateChange, EngineState::InProgress),
            (EventKind::StateChange, EngineState::Ok),
            (EventKind::Report, EngineState::Ok),
            (EventKind::StateChange, EngineState::Waiting),
        ]
    );
    let first = events.iter().find(|e| e.kind == EventKind::StateChange).unwrap();
    assert_eq!(first.transition.unwrap().from, EngineState::Waiting);
    for w in events.windows(2) {
        assert!(w[0].timestamp <= w[1].timestamp);
        assert_eq!(w[0].seq + 1, w[1].seq);
    }
    // Progress events arrive at the poll period of stream time.
    let progress: Vec<f64> = events.iter().filter(|e| e.kind == EventKind::Progress).map(|e| e.timestamp).collect();
    assert!(progress.len() > 50);
    for w in progress.windows(2) {
        assert!((w[1] - w[0] - 0.5).abs() < 0.04, "{w:?}");
    }
    let report = events.iter().find_map(|e| e.report.clone()).unwrap();
    assert_eq!(report.verdict, Verdict::Ok);

    svc.wait_idle().await;
    let (code, latest) = call(&app, "GET", "/report/latest", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(serde_json::from_value::<EpisodeReport>(latest).unwrap(), report);
    // The terminal snapshot stays available after the source is exhausted.
    let (_, status) = call(&app, "GET", "/status", None).await;
    assert_eq!(status, serde_json::json!({"washing": false, "movement": 0}));
}

#[tokio::test]
async fn lowered_threshold_applies_to_the_next_run() {
    let (svc, app) = synthetic_service(0.0);
    let (code, doc) = call(
        &app,
        "PUT",
        "/config",
        Some(serde_json::json!({"total_duration_s": 1.0, "required_movements": []})),
    )
    .await;
    assert_eq!(code, StatusCode::OK, "{doc}");
    assert_eq!(doc["total_duration_s"], 1.0);
    assert_eq!(doc["gate"]["min_duration_s"], 10.0);
    let (_, fetched) = call(&app, "GET", "/config", None).await;
    assert_eq!(fetched, doc);

    let body = open_events(&app).await;
    call(&app, "POST", "/run", None).await;
    let events = collect_events(body, |e| e.kind == EventKind::Report).await;
    let transitions: Vec<_> = events.iter().filter_map(|e| e.transition).collect();
    let started = transitions.iter().find(|t| t.to == EngineState::InProgress).unwrap();
    let ok = transitions.iter().find(|t| t.to == EngineState::Ok).unwrap();
    let washing = ok.t - started.t;
    assert!((washing - 1.0).abs() <= 0.1, "Ok after {washing} s of washing");
    svc.wait_idle().await;
}

#[tokio::test]
async fn config_validation() {
    let (_svc, app) = synthetic_service(0.0);
    let (code, body) = call(&app, "PUT", "/config", Some(serde_json::json!({"total_duration_s": -1.0}))).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("total_duration_s"), "{body}");
    let (code, _) = call(&app, "PUT", "/config", Some(serde_json::json!({"total": 1.0}))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (code, _) = call(&app, "PUT", "/config", Some(serde_json::json!({"required_movements": [11]}))).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, doc) = call(&app, "GET", "/config", None).await;
    assert_eq!(doc["total_duration_s"], 40.0);
}

#[tokio::test]
async fn one_run_at_a_time() {
    let (svc, app) = synthetic_service(1.0);
    assert_eq!(call(&app, "POST", "/run", None).await.0, StatusCode::ACCEPTED);
    assert_eq!(call(&app, "POST", "/run", None).await.0, StatusCode::CONFLICT);
    assert!(svc.is_running());
}

#[tokio::test]
async fn mid_stream_source_error_finalizes_the_episode() {
    let dir = tempfile::tempdir().unwrap();
    let spec = full_wash().with_frames(32, 24);
    let episode = handwash_core::monitor::generate_synthetic_episode(&spec).unwrap();
    for (i, frame) in episode.frames().unwrap().take(500).enumerate() {
        handwash_core::monitor::source::save_frame(&frame, &dir.path().join(format!("{i:06}.png"))).unwrap();
    }
    std::fs::write(dir.path().join("000500.png"), b"not a png").unwrap();

    let source = SourceSpec::FrameDirectory {
        path: dir.path().into(),
        fps: Default::default(),
        truth: None,
    };
    let (svc, app) = service(source, ClassifierSpec::Constant { movement: PalmToPalm }, 0.0);
    let body = open_events(&app).await;
    call(&app, "POST", "/run", None).await;
    let events = collect_events(body, |e| e.kind == EventKind::Error).await;
    let kinds: Vec<EventKind> = events.iter().filter(|e| e.kind != EventKind::Progress).map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        vec![EventKind::StateChange, EventKind::StateChange, EventKind::Report, EventKind::StateChange, EventKind::Error]
    );
    let report = events.iter().find_map(|e| e.report.as_ref()).unwrap();
    assert_eq!(report.verdict, Verdict::Failed);
    assert!(events.last().unwrap().message.as_deref().unwrap().contains("000500.png"));
    svc.wait_idle().await;
    assert_eq!(svc.snapshot().state, EngineState::Waiting);
}
