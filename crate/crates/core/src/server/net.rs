//! Websocket front end. One task per session owns its [`Session`]; socket
//! handlers talk to it only through an ordered channel.
//!
//! Routes:
//! - `POST /sessions` creates a session (optional JSON body with `opponent`,
//!   `resource_scaling`, `seed`) and returns `{"session": id}`.
//! - `GET /ws/{id}` connects to a session; `GET /ws` joins the oldest lobby
//!   with a free seat, creating one if needed.
//!
//! On connect the server sends `hello`; the client answers with `join`.

use super::protocol::{Body, ErrorCode, Frame, Outbound, SessionId};
use super::session::{Session, SessionConfig, SessionError, Status};
use crate::bots::{Opponent, StrategyId};
use crate::replay::{Replay, Role};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;
use tokio::sync::{mpsc, oneshot};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Template for new sessions; each session's seed is offset by its id.
    pub session: SessionConfig,
    pub tick_hz: u32,
    pub update_hz: u32,
    pub max_sessions: usize,
    /// Frames buffered per client before it is dropped as too slow.
    pub client_buffer: usize,
    pub replay_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            session: SessionConfig::default(),
            tick_hz: 25,
            update_hz: 10,
            max_sessions: 64,
            client_buffer: 512,
            replay_dir: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HubError {
    #[error("session limit of {0} reached")]
    CapacityExceeded(usize),
    #[error("no session {0}")]
    UnknownSession(SessionId),
    #[error(transparent)]
    Session(#[from] SessionError),
}

impl HubError {
    fn code(&self) -> ErrorCode {
        match self {
            HubError::CapacityExceeded(_) => ErrorCode::CapacityExceeded,
            HubError::UnknownSession(_) => ErrorCode::UnknownSession,
            HubError::Session(e) => e.code(),
        }
    }
}

enum SessionMsg {
    Hello(oneshot::Sender<Frame>),
    Join {
        conn: u64,
        role: Role,
        tx: mpsc::Sender<String>,
        slow: Arc<AtomicBool>,
        reply: oneshot::Sender<Result<(), SessionError>>,
    },
    Frame { conn: u64, role: Role, body: Body },
    Leave { conn: u64, role: Role },
}

struct Entry {
    tx: mpsc::UnboundedSender<SessionMsg>,
    lobby: Arc<Mutex<Vec<Role>>>,
}

/// Shared registry of live sessions.
#[derive(Clone)]
pub struct Hub {
    config: Arc<ServerConfig>,
    sessions: Arc<Mutex<BTreeMap<SessionId, Entry>>>,
    next_id: Arc<AtomicU64>,
    next_conn: Arc<AtomicU64>,
    finished: Arc<Mutex<Vec<(SessionId, Replay)>>>,
}

/// Optional overrides for a new session.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct SessionRequest {
    pub opponent: Option<StrategyId>,
    pub resource_scaling: Option<f64>,
    pub seed: Option<u64>,
}

impl Hub {
    pub fn new(config: ServerConfig) -> Hub {
        Hub {
            config: Arc::new(config),
            sessions: Arc::default(),
            next_id: Arc::new(AtomicU64::new(1)),
            next_conn: Arc::default(),
            finished: Arc::default(),
        }
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn live_sessions(&self) -> usize {
        self.sessions.lock().expect("hub lock").len()
    }

    /// Replays of sessions that have ended, in finishing order.
    pub fn finished(&self) -> Vec<(SessionId, Replay)> {
        self.finished.lock().expect("hub lock").clone()
    }

    /// Starts a session task. Must be called inside a tokio runtime.
    pub fn create_session(&self, req: SessionRequest) -> Result<SessionId, HubError> {
        let mut sessions = self.sessions.lock().expect("hub lock");
        if sessions.len() >= self.config.max_sessions {
            return Err(HubError::CapacityExceeded(self.config.max_sessions));
        }
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let mut cfg = self.config.session.clone();
        let strategy = req.opponent.unwrap_or(cfg.opponent.strategy);
        let scaling = req.resource_scaling.unwrap_or(cfg.opponent.resource_scaling);
        cfg.opponent = Opponent::new(strategy, scaling).map_err(|_| SessionError::BadMessage("resource_scaling"))?;
        cfg.seed = req.seed.unwrap_or(cfg.seed.wrapping_add(id));
        let session = Session::new(id, cfg)?;
        let (tx, rx) = mpsc::unbounded_channel();
        let lobby = Arc::new(Mutex::new(session.free_roles()));
        sessions.insert(
            id,
            Entry {
                tx,
                lobby: lobby.clone(),
            },
        );
        tokio::spawn(run_session(self.clone(), session, rx, lobby));
        Ok(id)
    }

    /// Oldest session with a free seat, or a fresh one.
    pub fn open_session(&self) -> Result<SessionId, HubError> {
        let found = {
            let sessions = self.sessions.lock().expect("hub lock");
            sessions
                .iter()
                .find(|(_, e)| !e.lobby.lock().expect("lobby lock").is_empty())
                .map(|(id, _)| *id)
        };
        match found {
            Some(id) => Ok(id),
            None => self.create_session(SessionRequest::default()),
        }
    }

    fn sender(&self, id: SessionId) -> Option<mpsc::UnboundedSender<SessionMsg>> {
        self.sessions.lock().expect("hub lock").get(&id).map(|e| e.tx.clone())
    }
}

struct Client {
    /// Connection id; frames from connections no longer seated are ignored.
    conn: u64,
    role: Role,
    tx: mpsc::Sender<String>,
    /// Set when the client is dropped for not keeping up.
    slow: Arc<AtomicBool>,
}

async fn run_session(
    hub: Hub,
    mut session: Session,
    mut rx: mpsc::UnboundedReceiver<SessionMsg>,
    lobby: Arc<Mutex<Vec<Role>>>,
) {
    let cfg = hub.config.clone();
    let id = session.id();
    let tick_hz = cfg.tick_hz.max(1);
    // Timers bottom out at a millisecond; faster clocks batch ticks.
    let per_wake = tick_hz.div_ceil(1000);
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(per_wake as f64 / tick_hz as f64));
    let mut updates = tokio::time::interval(Duration::from_secs_f64(1.0 / cfg.update_hz.max(1) as f64));
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    updates.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let mut clients: Vec<Client> = Vec::new();

    loop {
        let mut out = Vec::new();
        tokio::select! {
            msg = rx.recv() => match msg {
                None => break,
                Some(SessionMsg::Hello(reply)) => {
                    let _ = reply.send(session.hello());
                }
                Some(SessionMsg::Join { conn, role, tx, slow, reply }) => match session.join(role) {
                    Ok(o) => {
                        clients.push(Client { conn, role, tx, slow });
                        out = o;
                        let _ = reply.send(Ok(()));
                    }
                    Err(e) => {
                        let _ = reply.send(Err(e));
                    }
                },
                Some(SessionMsg::Frame { conn, role, body }) => {
                    if clients.iter().any(|c| c.conn == conn) {
                        match session.handle(role, body) {
                            Ok(o) => out = o,
                            Err(e) => out.push(Outbound::to(role, e.to_frame(session.tick_count()))),
                        }
                    }
                }
                Some(SessionMsg::Leave { conn, role }) => {
                    if clients.iter().any(|c| c.conn == conn) {
                        clients.retain(|c| c.conn != conn);
                        out = session.leave(role);
                    }
                }
            },
            _ = ticker.tick(), if session.status() == Status::Running => {
                for _ in 0..per_wake {
                    match session.tick() {
                        Ok(o) => out.extend(o),
                        Err(e) => {
                            log::error!("session {id}: {e}");
                            break;
                        }
                    }
                    if session.status() != Status::Running {
                        break;
                    }
                }
            },
            _ = updates.tick(), if session.status() == Status::Running => {
                out.extend(session.state_update());
            },
        }
        for role in dispatch(&mut clients, &out) {
            log::warn!("session {id}: dropping slow {role:?} client");
            out = session.leave(role);
            dispatch(&mut clients, &out);
        }
        *lobby.lock().expect("lobby lock") = session.free_roles();
        if session.status() == Status::Finished {
            break;
        }
    }

    let replay = session.replay();
    if let Some(dir) = &cfg.replay_dir {
        let path = dir.join(format!("session-{id}.mrtr"));
        if let Err(e) = std::fs::create_dir_all(dir).map_err(Into::into).and_then(|_| replay.save(&path)) {
            log::error!("session {id}: could not save replay: {e}");
        }
    }
    hub.sessions.lock().expect("hub lock").remove(&id);
    hub.finished.lock().expect("hub lock").push((id, replay));
    // Dropping the client senders closes their sockets after the queued
    // frames (game_over last) are written.
}

/// Sends each frame to the clients it is addressed to. Clients whose buffer
/// is full are removed; their roles are returned.
fn dispatch(clients: &mut Vec<Client>, out: &[Outbound]) -> Vec<Role> {
    let mut slow = Vec::new();
    for o in out {
        let text = o.frame.to_json();
        clients.retain(|c| {
            if !o.reaches(c.role) {
                return true;
            }
            match c.tx.try_send(text.clone()) {
                Ok(()) => true,
                Err(mpsc::error::TrySendError::Full(_)) => {
                    c.slow.store(true, Ordering::Relaxed);
                    slow.push(c.role);
                    false
                }
                Err(mpsc::error::TrySendError::Closed(_)) => {
                    slow.push(c.role);
                    false
                }
            }
        });
    }
    slow
}

pub fn router(hub: Hub) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/ws", get(ws_open))
        .route("/ws/{id}", get(ws_join))
        .route("/health", get(|| async { "ok" }))
        .with_state(hub)
}

pub async fn serve(listener: tokio::net::TcpListener, hub: Hub) -> std::io::Result<()> {
    axum::serve(listener, router(hub)).await
}

fn error_response(status: StatusCode, e: &HubError) -> Response {
    let body = Frame::new(
        0,
        Body::Error {
            code: e.code(),
            message: e.to_string(),
        },
    );
    (status, Json(body)).into_response()
}

async fn create(State(hub): State<Hub>, body: Option<Json<SessionRequest>>) -> Response {
    match hub.create_session(body.map(|Json(b)| b).unwrap_or_default()) {
        Ok(id) => Json(serde_json::json!({ "session": id })).into_response(),
        Err(e @ HubError::CapacityExceeded(_)) => error_response(StatusCode::SERVICE_UNAVAILABLE, &e),
        Err(e) => error_response(StatusCode::BAD_REQUEST, &e),
    }
}

async fn ws_open(State(hub): State<Hub>, ws: WebSocketUpgrade) -> Response {
    match hub.open_session() {
        Ok(id) => ws.on_upgrade(move |socket| connection(hub, id, socket)),
        Err(e) => error_response(StatusCode::SERVICE_UNAVAILABLE, &e),
    }
}

async fn ws_join(State(hub): State<Hub>, Path(id): Path<SessionId>, ws: WebSocketUpgrade) -> Response {
    if hub.sender(id).is_none() {
        return error_response(StatusCode::NOT_FOUND, &HubError::UnknownSession(id));
    }
    ws.on_upgrade(move |socket| connection(hub, id, socket))
}

fn error_text(code: ErrorCode, message: impl Into<String>) -> String {
    Frame::new(
        0,
        Body::Error {
            code,
            message: message.into(),
        },
    )
    .to_json()
}

async fn connection(hub: Hub, id: SessionId, socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let conn = hub.next_conn.fetch_add(1, Ordering::Relaxed);
    let (tx, mut rx) = mpsc::channel::<String>(hub.config.client_buffer.max(1));
    let slow = Arc::new(AtomicBool::new(false));
    // Writer: drains this client's queue in order and closes the socket once
    // every sender is gone.
    let slow_flag = slow.clone();
    let writer = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                return;
            }
        }
        if slow_flag.load(Ordering::Relaxed) {
            let _ = sink.send(Message::Text(error_text(ErrorCode::SlowConsumer, "client too slow").into())).await;
        }
        let _ = sink.send(Message::Close(None)).await;
    });

    let Some(session) = hub.sender(id) else {
        let _ = tx.send(error_text(ErrorCode::UnknownSession, format!("no session {id}"))).await;
        drop(tx);
        let _ = writer.await;
        return;
    };
    let (reply, hello) = oneshot::channel();
    if session.send(SessionMsg::Hello(reply)).is_err() {
        return;
    }
    if let Ok(frame) = hello.await {
        let _ = tx.send(frame.to_json()).await;
    }

    // Until the join succeeds this task owns the queue; afterwards only the
    // session does, so dropping the client there closes the socket.
    let mut own = Some(tx);
    let weak = own.as_ref().map(|t| t.downgrade()).expect("sender");
    let say = |own: &Option<mpsc::Sender<String>>, text: String| {
        if let Some(t) = own.clone().or_else(|| weak.upgrade()) {
            let _ = t.try_send(text);
        }
    };
    let mut role: Option<Role> = None;
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let frame = match Frame::from_json(&text) {
            Ok(f) => f,
            Err(e) => {
                say(&own, error_text(ErrorCode::BadMessage, e.to_string()));
                continue;
            }
        };
        match (role, frame.body) {
            (None, Body::Join { role: wanted }) => {
                let Some(tx) = own.clone() else { break };
                let (reply, answer) = oneshot::channel();
                let msg = SessionMsg::Join {
                    conn,
                    role: wanted,
                    tx,
                    slow: slow.clone(),
                    reply,
                };
                if session.send(msg).is_err() {
                    break;
                }
                match answer.await {
                    Ok(Ok(())) => {
                        role = Some(wanted);
                        own = None;
                    }
                    Ok(Err(e)) => say(&own, e.to_frame(0).to_json()),
                    Err(_) => break,
                }
            }
            (None, _) => say(&own, error_text(ErrorCode::NotJoined, "send join first")),
            (Some(_), Body::Join { .. }) => say(&own, error_text(ErrorCode::BadMessage, "already joined")),
            (Some(r), body) => {
                if session.send(SessionMsg::Frame { conn, role: r, body }).is_err() {
                    break;
                }
            }
        }
    }
    if let Some(r) = role {
        let _ = session.send(SessionMsg::Leave { conn, role: r });
    }
    drop(own);
    let _ = writer.await;
}
