//! The status service: one worker thread drives the pipeline and publishes
//! snapshots; HTTP handlers only read them.
//!
//! Endpoints:
//!
//! | method | path             | body                                            |
//! |--------|------------------|-------------------------------------------------|
//! | GET    | `/status`        | `{"washing": bool, "movement": code}`           |
//! | GET    | `/snapshot`      | the full engine snapshot                        |
//! | GET    | `/events`        | server-sent events, one [`StatusEvent`] each    |
//! | GET    | `/config`        | the current configuration document              |
//! | PUT    | `/config`        | partial document, merged into the current one   |
//! | GET    | `/report/latest` | last episode report, 404 before the first one   |
//! | POST   | `/run`           | (re)starts the source; 409 while one is running |

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::{HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use handwash_core::engine::{ComplianceConfig, ConfigDocument, Engine, EngineEvent, EngineSnapshot, EngineState, EpisodeReport, Transition};
use handwash_core::monitor::{write_episode_outputs, MonitorPipeline, OpenedSource, SourceSpec};
use handwash_core::pipeline::{build_classifier, ClassifierSpec};

use crate::config_file::merge_patch;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub source: SourceSpec,
    pub classifier: ClassifierSpec,
    pub config: ComplianceConfig,
    pub output_dir: Option<PathBuf>,
    /// Playback speed relative to the source's timestamps; 0 runs unpaced.
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    StateChange,
    Progress,
    Report,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusEvent {
    pub seq: u64,
    /// Service time in seconds: stream time plus an offset that keeps
    /// timestamps non-decreasing across reruns.
    pub timestamp: f64,
    pub run: u64,
    pub kind: EventKind,
    pub snapshot: EngineSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EpisodeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PollStatus {
    pub washing: bool,
    pub movement: u8,
}

struct Clock {
    seq: u64,
    run: u64,
    offset: f64,
    last: f64,
}

struct Inner {
    source: SourceSpec,
    classifier: ClassifierSpec,
    output_dir: Option<PathBuf>,
    speed: f64,
    config: Mutex<ComplianceConfig>,
    config_tx: Mutex<Option<mpsc::Sender<ComplianceConfig>>>,
    snapshot: RwLock<EngineSnapshot>,
    latest_report: RwLock<Option<EpisodeReport>>,
    running: AtomicBool,
    clock: Mutex<Clock>,
    events: broadcast::Sender<StatusEvent>,
}

#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

impl Service {
    pub fn new(opts: ServeOptions) -> anyhow::Result<Self> {
        opts.config.validate()?;
        opts.classifier.validate()?;
        anyhow::ensure!(opts.speed >= 0.0 && opts.speed.is_finite(), "speed must be a non-negative number");
        let initial = Engine::new(opts.config.clone())?.snapshot();
        let (events, _) = broadcast::channel(4096);
        Ok(Service {
            inner: Arc::new(Inner {
                source: opts.source,
                classifier: opts.classifier,
                output_dir: opts.output_dir,
                speed: opts.speed,
                config: Mutex::new(opts.config),
                config_tx: Mutex::new(None),
                snapshot: RwLock::new(initial),
                latest_report: RwLock::new(None),
                running: AtomicBool::new(false),
                clock: Mutex::new(Clock {
                    seq: 0,
                    run: 0,
                    offset: 0.0,
                    last: 0.0,
                }),
                events,
            }),
        })
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        self.inner.snapshot.read().unwrap().clone()
    }

    pub fn latest_report(&self) -> Option<EpisodeReport> {
        self.inner.latest_report.read().unwrap().clone()
    }

    pub fn config(&self) -> ComplianceConfig {
        self.inner.config.lock().unwrap().clone()
    }

    pub fn is_running(&self) -> bool {
        self.inner.running.load(Ordering::SeqCst)
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StatusEvent> {
        self.inner.events.subscribe()
    }

    /// Accepts a new configuration. A running stream picks it up at the next
    /// episode boundary; later runs start with it.
    pub fn set_config(&self, cfg: ComplianceConfig) -> anyhow::Result<()> {
        cfg.validate()?;
        *self.inner.config.lock().unwrap() = cfg.clone();
        if let Some(tx) = self.inner.config_tx.lock().unwrap().as_ref() {
            let _ = tx.send(cfg);
        }
        Ok(())
    }

    /// Starts a run on a worker thread. Returns false if one is in progress.
    pub fn start_run(&self) -> bool {
        if self.inner.running.swap(true, Ordering::SeqCst) {
            return false;
        }
        let (tx, rx) = mpsc::channel();
        *self.inner.config_tx.lock().unwrap() = Some(tx);
        {
            let mut clock = self.inner.clock.lock().unwrap();
            clock.run += 1;
            clock.offset = clock.last;
        }
        let inner = Arc::clone(&self.inner);
        std::thread::spawn(move || {
            let worker = Worker { inner: &inner, state: EngineState::Waiting };
            worker.run(rx);
            *inner.config_tx.lock().unwrap() = None;
            inner.running.store(false, Ordering::SeqCst);
        });
        true
    }

    /// Waits until the current run (if any) has finished.
    pub async fn wait_idle(&self) {
        while self.is_running() {
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
    }
}

struct Worker<'a> {
    inner: &'a Inner,
    state: EngineState,
}

impl Worker<'_> {
    fn emit(&self, kind: EventKind, t: f64, snapshot: EngineSnapshot, extra: impl FnOnce(&mut StatusEvent)) {
        // Sequence numbers and timestamps are assigned under the lock that
        // also covers the send, so subscribers see them in order.
        let mut clock = self.inner.clock.lock().unwrap();
        clock.seq += 1;
        let timestamp = (clock.offset + t).max(clock.last);
        clock.last = timestamp;
        let mut event = StatusEvent {
            seq: clock.seq,
            timestamp,
            run: clock.run,
            kind,
            snapshot,
            transition: None,
            report: None,
            message: None,
        };
        extra(&mut event);
        let _ = self.inner.events.send(event);
    }

    fn view(&self, pipeline: &MonitorPipeline) -> EngineSnapshot {
        let mut s = pipeline.engine().snapshot();
        s.state = self.state;
        s
    }

    fn publish(&self, pipeline: &MonitorPipeline) {
        *self.inner.snapshot.write().unwrap() = pipeline.engine().snapshot();
    }

    fn handle(&mut self, pipeline: &mut MonitorPipeline, events: Vec<EngineEvent>, t: f64, fps: handwash_core::dataset::Fps) {
        for event in events {
            match event {
                EngineEvent::StateChanged(tr) => {
                    self.state = tr.to;
                    let snap = self.view(pipeline);
                    self.emit(EventKind::StateChange, tr.t, snap, |e| e.transition = Some(tr));
                }
                EngineEvent::Report(report) => {
                    let labels = pipeline.take_episode_labels();
                    let mut message = None;
                    if let Some(dir) = &self.inner.output_dir {
                        if let Err(err) = write_episode_outputs(dir, &report, fps, labels) {
                            message = Some(format!("could not write report: {err}"));
                        }
                    }
                    *self.inner.latest_report.write().unwrap() = Some(report.clone());
                    let snap = self.view(pipeline);
                    self.emit(EventKind::Report, t, snap, |e| {
                        e.report = Some(report);
                        e.message = message;
                    });
                }
            }
        }
        self.publish(pipeline);
    }

    fn run(mut self, config_rx: mpsc::Receiver<ComplianceConfig>) {
        let config = self.inner.config.lock().unwrap().clone();
        let opened = OpenedSource::open(&self.inner.source).and_then(|source| {
            let clf = build_classifier(&self.inner.classifier)?;
            let pipeline = MonitorPipeline::new(config, clf, source.truth.clone(), &source.name)?;
            Ok((source, pipeline))
        });
        let (source, mut pipeline) = match opened {
            Ok(v) => v,
            Err(err) => {
                self.emit(EventKind::Error, 0.0, self.inner.snapshot.read().unwrap().clone(), |e| {
                    e.message = Some(err.to_string())
                });
                return;
            }
        };
        self.publish(&pipeline);

        let fps = source.fps;
        let started = Instant::now();
        let mut first_t = None;
        let mut next_progress = 0.0;
        let mut last_t = 0.0;
        for item in source.items {
            while let Ok(cfg) = config_rx.try_recv() {
                if let Err(err) = pipeline.set_config(cfg) {
                    let snap = self.view(&pipeline);
                    self.emit(EventKind::Error, last_t, snap, |e| e.message = Some(err.to_string()));
                }
            }
            let item = match item {
                Ok(item) => item,
                Err(err) => {
                    self.fail(&mut pipeline, last_t, fps, err.to_string());
                    return;
                }
            };
            let t = item.t;
            if self.inner.speed > 0.0 {
                let t0 = *first_t.get_or_insert(t);
                let due = started + Duration::from_secs_f64(((t - t0) / self.inner.speed).max(0.0));
                if let Some(wait) = due.checked_duration_since(Instant::now()) {
                    std::thread::sleep(wait);
                }
            }
            match pipeline.step(item) {
                Ok(events) => self.handle(&mut pipeline, events, t, fps),
                Err(err) => {
                    self.fail(&mut pipeline, last_t, fps, err.to_string());
                    return;
                }
            }
            last_t = t;
            if t >= next_progress {
                let snap = self.view(&pipeline);
                self.emit(EventKind::Progress, t, snap, |_| {});
                let period = pipeline.engine().config().poll_period_s;
                while next_progress <= t {
                    next_progress += period;
                }
            }
        }
        let events = pipeline.finish(None);
        self.handle(&mut pipeline, events, last_t, fps);
    }

    /// Mid-stream failure: finalize the engine, then report the error.
    fn fail(&mut self, pipeline: &mut MonitorPipeline, t: f64, fps: handwash_core::dataset::Fps, message: String) {
        let events = pipeline.finish(Some(t));
        self.handle(pipeline, events, t, fps);
        let snap = self.view(pipeline);
        self.emit(EventKind::Error, t, snap, |e| e.message = Some(message));
    }
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

async fn status(State(svc): State<Service>) -> Json<PollStatus> {
    let (washing, movement) = svc.snapshot().poll();
    Json(PollStatus { washing, movement })
}

async fn snapshot(State(svc): State<Service>) -> Json<EngineSnapshot> {
    Json(svc.snapshot())
}

async fn get_config(State(svc): State<Service>) -> Json<ConfigDocument> {
    Json(svc.config().to_document())
}

async fn put_config(State(svc): State<Service>, Json(patch): Json<serde_json::Value>) -> Response {
    let current = serde_json::to_value(svc.config().to_document()).expect("config documents serialize");
    let merged = match merge_patch(current, patch) {
        Ok(v) => v,
        Err(err) => return error_response(StatusCode::BAD_REQUEST, err.to_string()),
    };
    let doc: ConfigDocument = match serde_json::from_value(merged) {
        Ok(doc) => doc,
        Err(err) => return error_response(StatusCode::BAD_REQUEST, err.to_string()),
    };
    let cfg = match ComplianceConfig::from_document(&doc) {
        Ok(cfg) => cfg,
        Err(err) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, err.to_string()),
    };
    match svc.set_config(cfg) {
        Ok(()) => Json(svc.config().to_document()).into_response(),
        Err(err) => error_response(StatusCode::UNPROCESSABLE_ENTITY, err.to_string()),
    }
}

async fn latest_report(State(svc): State<Service>) -> Response {
    match svc.latest_report() {
        Some(r) => Json(r).into_response(),
        None => error_response(StatusCode::NOT_FOUND, "no episode has been reported yet"),
    }
}

async fn start(State(svc): State<Service>) -> Response {
    if svc.start_run() {
        (StatusCode::ACCEPTED, Json(serde_json::json!({ "started": true }))).into_response()
    } else {
        error_response(StatusCode::CONFLICT, "a run is already in progress")
    }
}

fn event_stream(rx: broadcast::Receiver<StatusEvent>) -> impl Stream<Item = Result<Event, Infallible>> {
    futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(ev) => {
                    let data = serde_json::to_string(&ev).expect("status events serialize");
                    return Some((Ok(Event::default().id(ev.seq.to_string()).data(data)), rx));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
}

async fn events(State(svc): State<Service>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    Sse::new(event_stream(svc.subscribe())).keep_alive(KeepAlive::default())
}

async fn allow_any_origin(mut res: Response) -> Response {
    res.headers_mut()
        .insert("access-control-allow-origin", HeaderValue::from_static("*"));
    res
}

pub fn router(svc: Service) -> Router {
    Router::new()
        .route("/status", get(status))
        .route("/snapshot", get(snapshot))
        .route("/events", get(events))
        .route("/config", get(get_config).put(put_config))
        .route("/report/latest", get(latest_report))
        .route("/run", post(start))
        .layer(axum::middleware::map_response(allow_any_origin))
        .with_state(svc)
}

/// Serves until the process is stopped. The first run starts immediately
/// unless `hold` is set.
pub async fn serve(opts: ServeOptions, listener: tokio::net::TcpListener, hold: bool) -> anyhow::Result<()> {
    let svc = Service::new(opts)?;
    if !hold {
        svc.start_run();
    }
    axum::serve(listener, router(svc)).await?;
    Ok(())
}
