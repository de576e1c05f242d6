use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use prevent_cli::gateway::{bind, Gateway, GatewayConfig, GatewayError};
use prevent_core::orchestrator::{EventKind, SessionSnapshot, SessionView, TaskState, WireEvent, SCHEMA_VERSION};
use serde_json::{json, Value};
use tower::ServiceExt;

const WAIT: Duration = Duration::from_secs(30);

fn app(tick_ms: u64) -> Router {
    Gateway::new(GatewayConfig {
        tick_interval: Duration::from_millis(tick_ms),
    })
    .router()
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn create(app: &Router, scenario: &str) -> SessionSnapshot {
    let (status, body) = call(
        app,
        "POST",
        "/sessions",
        Some(json!({ "scenario": scenario, "exact_models": true })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    serde_json::from_value(body).unwrap()
}

fn task(task_type: &str, name: &str, location: &str, id: &str) -> Value {
    json!({ "task_type": task_type, "task_name": name, "location": location, "robot_task_id": id, "user_id": "chemist" })
}

async fn snapshot(app: &Router, session: &str) -> SessionSnapshot {
    let (status, body) = call(app, "GET", &format!("/sessions/{session}/snapshot"), None).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_value(body).unwrap()
}

/// Reads server-sent events off a response body.
struct EventStream {
    body: Body,
    buf: String,
}

impl EventStream {
    async fn open(app: &Router, session: &str, after: u64) -> EventStream {
        let req = Request::get(format!("/sessions/{session}/events?after={after}"))
            .body(Body::empty())
            .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        assert_eq!(resp.status(), StatusCode::OK);
        assert_eq!(resp.headers()["content-type"], "text/event-stream");
        EventStream {
            body: resp.into_body(),
            buf: String::new(),
        }
    }

    async fn next(&mut self) -> WireEvent {
        loop {
            if let Some(end) = self.buf.find("\n\n") {
                let block: String = self.buf.drain(..end + 2).collect();
                let data: String = block.lines().filter_map(|l| l.strip_prefix("data: ")).collect();
                if !data.is_empty() {
                    return serde_json::from_str(&data).unwrap();
                }
                continue;
            }
            let frame = tokio::time::timeout(WAIT, self.body.frame())
                .await
                .expect("event within the deadline")
                .expect("stream still open")
                .unwrap();
            if let Ok(data) = frame.into_data() {
                self.buf.push_str(std::str::from_utf8(&data).unwrap());
            }
        }
    }

    /// Collects events up to and including the first of `kind`.
    async fn until(&mut self, kind: EventKind) -> Vec<WireEvent> {
        let mut out = Vec::new();
        loop {
            let e = self.next().await;
            let done = e.kind == kind;
            out.push(e);
            if done {
                return out;
            }
        }
    }
}

fn kinds(events: &[WireEvent]) -> Vec<EventKind> {
    events.iter().map(|e| e.kind).collect()
}

#[tokio::test]
async fn fresh_session_is_idle_with_no_alerts() {
    let app = app(0);
    let snap = create(&app, "T1_NH").await;
    assert_eq!(snap.active_task, None);
    assert!(snap.pending_alerts.is_empty());
    assert_eq!(snap.last_seq, 0);
    let (status, list) = call(&app, "GET", "/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list[0]["session_id"], snap.session_id);
    assert_eq!(list[0]["scenario_id"], "T1_NH");
}

#[tokio::test]
async fn clean_combined_task_streams_to_done() {
    let app = app(0);
    let s = create(&app, "T1_NH").await.session_id;
    let mut events = EventStream::open(&app, &s, 0).await;
    let (status, _) = call(
        &app,
        "POST",
        &format!("/sessions/{s}/tasks"),
        Some(task("combined_task", "pickup_rack", "capping", "r1")),
    )
    .await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let got = events.until(EventKind::TaskDone).await;
    assert_eq!(
        kinds(&got),
        [
            EventKind::TaskAccepted,
            EventKind::SkillStarted,
            EventKind::SkillStarted,
            EventKind::TaskDone
        ]
    );
    for (i, e) in got.iter().enumerate() {
        assert_eq!(e.seq, i as u64 + 1);
        assert_eq!(e.schema, SCHEMA_VERSION);
    }
    let (status, record) = call(&app, "GET", &format!("/sessions/{s}/record?robot_task_id=r1"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(record["success"], true);
    assert_eq!(record["outcomes"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn consent_without_pending_halt_is_409() {
    let app = app(0);
    let s = create(&app, "T1_NH").await.session_id;
    let consent = json!({ "robot_task_id": "r1", "command": "continue" });
    let (status, body) = call(&app, "POST", &format!("/sessions/{s}/consent"), Some(consent.clone())).await;
    assert_eq!(status, StatusCode::NOT_FOUND, "{body}");
    assert_eq!(body["error"], "unknown_task");

    let mut events = EventStream::open(&app, &s, 0).await;
    call(
        &app,
        "POST",
        &format!("/sessions/{s}/tasks"),
        Some(task("NAV", "navigate", "capping", "r1")),
    )
    .await;
    events.until(EventKind::TaskDone).await;
    let (status, body) = call(&app, "POST", &format!("/sessions/{s}/consent"), Some(consent)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "no_pending_consent");
}

#[tokio::test]
async fn errors_map_to_statuses() {
    let app = app(5);
    let (status, body) = call(&app, "GET", "/sessions/nope/snapshot", None).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::NOT_FOUND, Some("unknown_session"))
    );
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({ "scenario": "S9" }))).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::BAD_REQUEST, Some("scenario_load"))
    );

    let s = create(&app, "T1_NH").await.session_id;
    let uri = format!("/sessions/{s}/tasks");
    let (status, body) = call(&app, "POST", &uri, Some(task("LBR", "juggle", "capping", "r1"))).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::BAD_REQUEST, Some("invalid_task"))
    );
    let (status, _) = call(&app, "POST", &uri, Some(task("NAV", "navigate", "capping", "r1"))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let (status, body) = call(&app, "POST", &uri, Some(task("NAV", "navigate", "dock", "r2"))).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::CONFLICT, Some("busy")));
    let (status, body) = call(&app, "GET", &format!("/sessions/{s}/record?robot_task_id=r9"), None).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::NOT_FOUND, Some("unknown_record"))
    );
}

#[tokio::test]
async fn injected_glove_halts_navigation() {
    let app = app(1);
    let s = create(&app, "T1_NH").await.session_id;
    let mut events = EventStream::open(&app, &s, 0).await;
    call(
        &app,
        "POST",
        &format!("/sessions/{s}/tasks"),
        Some(task("NAV", "navigate", "capping", "r1")),
    )
    .await;
    events.until(EventKind::SkillStarted).await;
    let glove = json!({ "id": "glove", "kind": "contaminated_glove", "ahead": 0.5, "on_path": true, "unsafe": true });
    let (status, body) = call(&app, "POST", &format!("/sessions/{s}/inject"), Some(glove)).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{body}");
    assert_eq!(events.next().await.kind, EventKind::Halted);
    let alert = events.next().await;
    assert_eq!(alert.kind, EventKind::AlertRaised);
    assert_eq!(alert.payload["x1"], 1);
    assert_eq!(alert.payload["x3"]["label"], "contaminated_glove");

    let snap = snapshot(&app, &s).await;
    assert_eq!(snap.pending_alerts.len(), 1);
    assert_eq!(snap.tasks["r1"], TaskState::AwaitingConsent);

    let consent = json!({ "robot_task_id": "r1", "command": "abort", "user_id": "ada" });
    let (status, _) = call(&app, "POST", &format!("/sessions/{s}/consent"), Some(consent)).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let rest = events.until(EventKind::TaskFailed).await;
    assert_eq!(rest[0].kind, EventKind::ConsentReceived);
    assert_eq!(rest[0].payload["user_id"], "ada");
}

#[tokio::test]
async fn late_joiner_reconstructs_the_continuous_view() {
    let app = app(1);
    let first = create(&app, "S2").await;
    let s = first.session_id.clone();
    let mut early = EventStream::open(&app, &s, 0).await;
    call(
        &app,
        "POST",
        &format!("/sessions/{s}/tasks"),
        Some(task("NAV", "navigate", "capping", "r1")),
    )
    .await;
    let mut seen = early.until(EventKind::AlertRaised).await;

    let mid = snapshot(&app, &s).await;
    assert_eq!(mid.pending_alerts.len(), 1);
    assert_eq!(mid.pending_alerts[0].alert.x3.as_ref().unwrap().label, "spillage");
    let mut late = EventStream::open(&app, &s, mid.last_seq).await;

    let consent = json!({ "robot_task_id": "r1", "command": "continue" });
    let started = std::time::Instant::now();
    call(&app, "POST", &format!("/sessions/{s}/consent"), Some(consent)).await;
    let rest = early.until(EventKind::TaskDone).await;
    assert_eq!(rest[0].kind, EventKind::ConsentReceived);
    assert!(started.elapsed() < WAIT);
    seen.extend(rest);

    let mut continuous = SessionView::from_snapshot(&first);
    continuous.apply_all(&seen).unwrap();
    let mut rejoined = SessionView::from_snapshot(&mid);
    rejoined.apply_all(&late.until(EventKind::TaskDone).await).unwrap();
    assert_eq!(rejoined, continuous);
    assert_eq!(continuous, SessionView::from_snapshot(&snapshot(&app, &s).await));
    assert_eq!(continuous.tasks["r1"], TaskState::Done);
}

#[tokio::test]
async fn last_event_id_resumes_the_stream() {
    let app = app(0);
    let s = create(&app, "T1_NH").await.session_id;
    let mut events = EventStream::open(&app, &s, 0).await;
    call(
        &app,
        "POST",
        &format!("/sessions/{s}/tasks"),
        Some(task("NAV", "navigate", "capping", "r1")),
    )
    .await;
    let all = events.until(EventKind::TaskDone).await;
    let req = Request::get(format!("/sessions/{s}/events"))
        .header("last-event-id", "1")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let mut resumed = EventStream {
        body: resp.into_body(),
        buf: String::new(),
    };
    assert_eq!(resumed.until(EventKind::TaskDone).await, all[1..]);
}

#[tokio::test]
async fn bind_reports_a_taken_port() {
    let taken = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = taken.local_addr().unwrap();
    assert!(matches!(bind(addr).await, Err(GatewayError::Bind { .. })));
}

#[tokio::test]
async fn unanswered_alert_times_out_without_consent_event() {
    let app = app(0);
    let body = json!({ "scenario": "S2", "exact_models": true, "timing": { "abort_timeout_s": 5.0 } });
    let (status, snap) = call(&app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED);
    let s = snap["session_id"].as_str().unwrap().to_string();
    let mut events = EventStream::open(&app, &s, 0).await;
    call(
        &app,
        "POST",
        &format!("/sessions/{s}/tasks"),
        Some(task("NAV", "navigate", "capping", "r1")),
    )
    .await;
    let got = events.until(EventKind::TaskFailed).await;
    assert!(!kinds(&got).contains(&EventKind::ConsentReceived));
    let alert = got.iter().find(|e| e.kind == EventKind::AlertRaised).unwrap();
    let failed = got.last().unwrap();
    assert!(failed.timestamp - alert.timestamp >= 5.0 - 1e-9);
}
