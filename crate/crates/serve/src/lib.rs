//! HTTP + WebSocket front end for [`prefnet::steer::Session`].
//!
//! REST:
//! - `POST /sessions` creates a paused session and returns its state.
//! - `GET /sessions` lists sessions, `GET /sessions/{id}` returns one.
//! - `DELETE /sessions/{id}` ends a session.
//!
//! WebSocket `/session/{id}`: the client sends [`ControlMessage`] JSON and
//! receives [`ServerMessage`] JSON (acks for its own controls, telemetry
//! frames for every tick). Any number of sockets may watch one session.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use prefnet::datagen::DatasetRecord;
use prefnet::rl::{Agent, Preference};
use prefnet::sim::{EnvConfig, Topology};
use prefnet::steer::{Ack, ControlMessage, ServerMessage, Session, SessionState, PROTOCOL_VERSION};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use tokio::task::JoinHandle;

pub const DEFAULT_TICK_MS: u64 = 500;

/// What every session of this server runs on.
#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub topology: Topology,
    pub env_config: EnvConfig,
    pub records: Arc<Vec<DatasetRecord>>,
    /// Named checkpoints; a create request may also give a file path.
    pub checkpoints: BTreeMap<String, PathBuf>,
    pub default_tick_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub checkpoint: String,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick_ms: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub version: u32,
    pub error: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("no session {0}")]
    NoSession(String),
    #[error("checkpoint {0}: {1}")]
    Checkpoint(String, String),
    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl IntoResponse for ServeError {
    fn into_response(self) -> Response {
        let status = match self {
            ServeError::NoSession(_) => StatusCode::NOT_FOUND,
            ServeError::Checkpoint(..) | ServeError::Incompatible(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServeError::BadRequest(_) => StatusCode::BAD_REQUEST,
        };
        (
            status,
            Json(ErrorBody {
                version: PROTOCOL_VERSION,
                error: self.to_string(),
            }),
        )
            .into_response()
    }
}

type Subscription = (Arc<Mutex<Session>>, broadcast::Receiver<Arc<str>>);

struct Handle {
    session: Arc<Mutex<Session>>,
    frames: broadcast::Sender<Arc<str>>,
    ticker: JoinHandle<()>,
}

impl Drop for Handle {
    fn drop(&mut self) {
        self.ticker.abort();
    }
}

pub struct AppState {
    config: ServeConfig,
    sessions: RwLock<HashMap<String, Handle>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServeConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn load_agent(&self, name: &str) -> Result<Agent, ServeError> {
        let path = self
            .config
            .checkpoints
            .get(name)
            .cloned()
            .unwrap_or_else(|| PathBuf::from(name));
        let agent = Agent::load(&path)
            .map_err(|e| ServeError::Checkpoint(name.to_string(), e.to_string()))?;
        if agent.topology != self.config.topology.name() {
            return Err(ServeError::Incompatible(format!(
                "agent was trained on {}, server runs {}",
                agent.topology,
                self.config.topology.name()
            )));
        }
        Ok(agent)
    }

    /// Creates a paused session and starts its tick loop.
    pub async fn create(self: &Arc<Self>, req: CreateSession) -> Result<SessionState, ServeError> {
        let app = self.clone();
        let name = req.checkpoint.clone();
        let agent = tokio::task::spawn_blocking(move || app.load_agent(&name))
            .await
            .map_err(|e| ServeError::BadRequest(e.to_string()))??;
        let agent = Arc::new(agent);
        let tick_ms = req.tick_ms.unwrap_or(self.config.default_tick_ms);
        if tick_ms == 0 {
            return Err(ServeError::BadRequest("tick_ms must be >= 1".into()));
        }
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let pref = Preference::new(req.alpha, req.beta);
        let session = Session::new(
            id.clone(),
            req.checkpoint,
            agent,
            &self.config.topology,
            &self.config.env_config,
            self.config.records.clone(),
            pref,
        )
        .map_err(|e| ServeError::Incompatible(e.to_string()))?;
        let state = session.state();
        let session = Arc::new(Mutex::new(session));
        let (frames, _) = broadcast::channel(256);
        let ticker = tokio::spawn(tick_loop(
            session.clone(),
            frames.clone(),
            Duration::from_millis(tick_ms),
        ));
        self.sessions.write().expect("session table lock").insert(
            id,
            Handle {
                session,
                frames,
                ticker,
            },
        );
        Ok(state)
    }

    pub fn state(&self, id: &str) -> Result<SessionState, ServeError> {
        let sessions = self.sessions.read().expect("session table lock");
        let h = sessions
            .get(id)
            .ok_or_else(|| ServeError::NoSession(id.to_string()))?;
        let state = h.session.lock().expect("session lock").state();
        Ok(state)
    }

    pub fn list(&self) -> Vec<SessionState> {
        let sessions = self.sessions.read().expect("session table lock");
        let mut out: Vec<SessionState> = sessions
            .values()
            .map(|h| h.session.lock().expect("session lock").state())
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub fn remove(&self, id: &str) -> Result<SessionState, ServeError> {
        let h = self
            .sessions
            .write()
            .expect("session table lock")
            .remove(id)
            .ok_or_else(|| ServeError::NoSession(id.to_string()))?;
        let state = h.session.lock().expect("session lock").state();
        Ok(state)
    }

    fn subscribe(&self, id: &str) -> Result<Subscription, ServeError> {
        let sessions = self.sessions.read().expect("session table lock");
        let h = sessions
            .get(id)
            .ok_or_else(|| ServeError::NoSession(id.to_string()))?;
        Ok((h.session.clone(), h.frames.subscribe()))
    }
}

async fn tick_loop(
    session: Arc<Mutex<Session>>,
    frames: broadcast::Sender<Arc<str>>,
    period: Duration,
) {
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        let (frame, ended) = {
            let mut s = session.lock().expect("session lock");
            (s.tick(), s.is_ended())
        };
        if let Some(frame) = frame {
            let text =
                serde_json::to_string(&ServerMessage::Telemetry(frame)).expect("frames serialize");
            // no subscribers is fine; frames are not buffered for latecomers
            let _ = frames.send(text.into());
        }
        if ended {
            break;
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/session/{id}", get(ws_upgrade))
        .with_state(state)
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> Json<Vec<SessionState>> {
    Json(app.list())
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, axum::extract::rejection::JsonRejection>,
) -> Result<(StatusCode, Json<SessionState>), ServeError> {
    let Json(req) = body.map_err(|e| ServeError::BadRequest(e.body_text()))?;
    Ok((StatusCode::CREATED, Json(app.create(req).await?)))
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionState>, ServeError> {
    Ok(Json(app.state(&id)?))
}

async fn delete_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionState>, ServeError> {
    Ok(Json(app.remove(&id)?))
}

async fn ws_upgrade(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ServeError> {
    let (session, frames) = app.subscribe(&id)?;
    Ok(ws.on_upgrade(move |socket| ws_session(socket, session, frames)))
}

fn nack(tick: u64, error: String) -> ServerMessage {
    ServerMessage::Ack(Ack {
        version: PROTOCOL_VERSION,
        ok: false,
        tick,
        error: Some(error),
    })
}

async fn ws_session(
    socket: WebSocket,
    session: Arc<Mutex<Session>>,
    mut frames: broadcast::Receiver<Arc<str>>,
) {
    let (mut tx, mut rx) = socket.split();
    let (reply_tx, mut reply_rx) = tokio::sync::mpsc::channel::<String>(64);

    // single writer: acks and telemetry interleave in the order produced
    let writer = tokio::spawn(async move {
        loop {
            tokio::select! {
                reply = reply_rx.recv() => match reply {
                    Some(text) => if tx.send(Message::Text(text.into())).await.is_err() { break },
                    None => break,
                },
                frame = frames.recv() => match frame {
                    Ok(text) => if tx.send(Message::Text(text.as_ref().into())).await.is_err() { break },
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            }
        }
    });

    while let Some(Ok(msg)) = rx.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let reply = {
            let mut s = session.lock().expect("session lock");
            let tick = s.state().tick;
            match serde_json::from_str::<ControlMessage>(&text) {
                Ok(control) => match s.apply_control(control) {
                    Ok(ack) => ServerMessage::Ack(ack),
                    Err(e) => nack(tick, e.to_string()),
                },
                Err(e) => nack(tick, format!("malformed control: {e}")),
            }
        };
        let text = serde_json::to_string(&reply).expect("acks serialize");
        if reply_tx.send(text).await.is_err() {
            break;
        }
    }
    drop(reply_tx);
    writer.abort();
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServeConfig, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(config))).await
}
