//! HTTP service over orchestrator sessions.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | `POST` | `/sessions` | session config | snapshot |
//! | `GET` | `/sessions` | | session list |
//! | `POST` | `/sessions/{id}/tasks` | task message | `202` |
//! | `GET` | `/sessions/{id}/events` | | event stream (SSE) |
//! | `POST` | `/sessions/{id}/consent` | consent | `202` |
//! | `POST` | `/sessions/{id}/inject` | hazard | `202` |
//! | `GET` | `/sessions/{id}/record` | | run records |
//! | `GET` | `/sessions/{id}/snapshot` | | snapshot |
//!
//! Every mutation goes through the session's command queue; the service
//! keeps no session state of its own.

mod actor;

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::stream::{self, Stream, StreamExt};
use prevent_core::orchestrator::{
    Mode, OrchestratorError, RunRecord, SessionConfig, SessionSnapshot, TaskMessage, WireEvent,
};
use prevent_core::skills::ConsentCommand;
use prevent_core::world::HazardSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{broadcast, oneshot};

use actor::Command;

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Wall-clock time per simulation tick; zero runs as fast as possible.
    pub tick_interval: Duration,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            tick_interval: Duration::from_millis(10),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub scenario_id: String,
    pub mode: Mode,
}

struct Handle {
    info: SessionInfo,
    queue: mpsc::Sender<Command>,
}

#[derive(Clone)]
pub struct Gateway {
    inner: Arc<Inner>,
}

struct Inner {
    config: GatewayConfig,
    sessions: Mutex<BTreeMap<String, Handle>>,
    next_id: AtomicU64,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Gateway {
        Gateway {
            inner: Arc::new(Inner {
                config,
                sessions: Mutex::new(BTreeMap::new()),
                next_id: AtomicU64::new(1),
            }),
        }
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/sessions", post(create_session).get(list_sessions))
            .route("/sessions/{id}/tasks", post(submit_task))
            .route("/sessions/{id}/events", get(stream_events))
            .route("/sessions/{id}/consent", post(post_consent))
            .route("/sessions/{id}/inject", post(inject))
            .route("/sessions/{id}/record", get(get_record))
            .route("/sessions/{id}/snapshot", get(get_snapshot))
            .with_state(self.clone())
    }

    fn queue(&self, id: &str) -> Result<mpsc::Sender<Command>, ApiError> {
        let sessions = self.inner.sessions.lock().expect("session table lock");
        sessions
            .get(id)
            .map(|h| h.queue.clone())
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    async fn ask<T>(&self, id: &str, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, ApiError> {
        let queue = self.queue(id)?;
        let (tx, rx) = oneshot::channel();
        queue.send(make(tx)).map_err(|_| ApiError::SessionClosed)?;
        rx.await.map_err(|_| ApiError::SessionClosed)
    }
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(addr: SocketAddr, gateway: Gateway) -> Result<(), GatewayError> {
    let listener = bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, gateway.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub async fn bind(addr: SocketAddr) -> Result<tokio::net::TcpListener, GatewayError> {
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| GatewayError::Bind { addr, source })
}

#[derive(Debug)]
pub enum ApiError {
    UnknownSession(String),
    DuplicateSession(String),
    SessionClosed,
    Orchestrator(OrchestratorError),
    UnknownRecord(String),
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        ApiError::Orchestrator(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match &self {
            ApiError::UnknownSession(id) => (StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`")),
            ApiError::DuplicateSession(id) => (
                StatusCode::CONFLICT,
                "duplicate_session",
                format!("session `{id}` already exists"),
            ),
            ApiError::SessionClosed => (
                StatusCode::SERVICE_UNAVAILABLE,
                "session_closed",
                "session thread is gone".into(),
            ),
            ApiError::UnknownRecord(id) => (StatusCode::NOT_FOUND, "unknown_record", format!("no record for `{id}`")),
            ApiError::Orchestrator(e) => {
                let (status, code) = match e {
                    OrchestratorError::InvalidTask(m) if m == "busy" => (StatusCode::CONFLICT, "busy"),
                    OrchestratorError::InvalidTask(_) => (StatusCode::BAD_REQUEST, "invalid_task"),
                    OrchestratorError::NoPendingConsent(_) => (StatusCode::CONFLICT, "no_pending_consent"),
                    OrchestratorError::UnknownTask(_) => (StatusCode::NOT_FOUND, "unknown_task"),
                    OrchestratorError::ScenarioLoad(_) => (StatusCode::BAD_REQUEST, "scenario_load"),
                    OrchestratorError::World(_) => (StatusCode::BAD_REQUEST, "world"),
                    OrchestratorError::Skill(_) => (StatusCode::INTERNAL_SERVER_ERROR, "skill"),
                };
                (status, code, e.to_string())
            }
        };
        (status, Json(json!({ "error": code, "message": message }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    #[serde(default)]
    session_id: Option<String>,
    #[serde(flatten)]
    config: SessionConfig,
}

async fn create_session(
    State(gw): State<Gateway>,
    Json(body): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionSnapshot>), ApiError> {
    let id = match body.session_id {
        Some(id) => id,
        None => format!("s{}", gw.inner.next_id.fetch_add(1, Ordering::Relaxed)),
    };
    if gw.inner.sessions.lock().expect("session table lock").contains_key(&id) {
        return Err(ApiError::DuplicateSession(id));
    }
    let interval = gw.inner.config.tick_interval;
    let (queue, snapshot) = {
        let id = id.clone();
        tokio::task::spawn_blocking(move || actor::spawn(id, body.config, interval))
            .await
            .map_err(|_| ApiError::SessionClosed)??
    };
    let info = SessionInfo {
        session_id: id.clone(),
        scenario_id: snapshot.scenario_id.clone(),
        mode: snapshot.mode,
    };
    let mut sessions = gw.inner.sessions.lock().expect("session table lock");
    if sessions.contains_key(&id) {
        return Err(ApiError::DuplicateSession(id));
    }
    sessions.insert(id, Handle { info, queue });
    Ok((StatusCode::CREATED, Json(snapshot)))
}

async fn list_sessions(State(gw): State<Gateway>) -> Json<Vec<SessionInfo>> {
    let sessions = gw.inner.sessions.lock().expect("session table lock");
    Json(sessions.values().map(|h| h.info.clone()).collect())
}

async fn submit_task(
    State(gw): State<Gateway>,
    Path(id): Path<String>,
    Json(msg): Json<TaskMessage>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let robot_task_id = msg.robot_task_id.clone();
    gw.ask(&id, |tx| Command::Submit(msg, tx)).await??;
    Ok((StatusCode::ACCEPTED, Json(json!({ "robot_task_id": robot_task_id }))))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConsentBody {
    pub robot_task_id: String,
    pub command: ConsentCommand,
    #[serde(default = "operator")]
    pub user_id: String,
}

fn operator() -> String {
    "operator".into()
}

async fn post_consent(
    State(gw): State<Gateway>,
    Path(id): Path<String>,
    Json(body): Json<ConsentBody>,
) -> Result<StatusCode, ApiError> {
    gw.ask(&id, |reply| Command::Consent {
        robot_task_id: body.robot_task_id,
        command: body.command,
        user_id: body.user_id,
        reply,
    })
    .await??;
    Ok(StatusCode::ACCEPTED)
}

async fn inject(
    State(gw): State<Gateway>,
    Path(id): Path<String>,
    Json(spec): Json<HazardSpec>,
) -> Result<StatusCode, ApiError> {
    gw.ask(&id, |tx| Command::Inject(spec, tx)).await??;
    Ok(StatusCode::ACCEPTED)
}

#[derive(Debug, Deserialize)]
struct RecordQuery {
    robot_task_id: Option<String>,
}

async fn get_record(
    State(gw): State<Gateway>,
    Path(id): Path<String>,
    Query(q): Query<RecordQuery>,
) -> Result<Response, ApiError> {
    let records: Vec<RunRecord> = gw.ask(&id, Command::Records).await?;
    match q.robot_task_id {
        None => Ok(Json(records).into_response()),
        Some(task) => records
            .into_iter()
            .find(|r| r.task.robot_task_id == task)
            .map(|r| Json(r).into_response())
            .ok_or(ApiError::UnknownRecord(task)),
    }
}

async fn get_snapshot(State(gw): State<Gateway>, Path(id): Path<String>) -> Result<Json<SessionSnapshot>, ApiError> {
    Ok(Json(gw.ask(&id, Command::Snapshot).await?))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

/// Replays events after `after` (or the `Last-Event-ID` header), then
/// follows live. A subscriber that falls too far behind is disconnected
/// and resumes by reconnecting with its last id.
async fn stream_events(
    State(gw): State<Gateway>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let last_id = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse().ok());
    let after = last_id.or(q.after).unwrap_or(0);
    let (backlog, rx) = gw.ask(&id, |reply| Command::Subscribe { after, reply }).await?;
    let live = stream::unfold(rx, |mut rx| async move {
        match rx.recv().await {
            Ok(e) => Some((e, rx)),
            Err(broadcast::error::RecvError::Lagged(_) | broadcast::error::RecvError::Closed) => None,
        }
    });
    let events = stream::iter(backlog).chain(live).map(|e| Ok(sse_event(&e)));
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

fn sse_event(e: &WireEvent) -> Event {
    Event::default()
        .id(e.seq.to_string())
        .event(e.kind.name())
        .data(serde_json::to_string(e).expect("events serialize"))
}
