//! WebSocket front end. Each session runs in its own task and owns its
//! engine; connection tasks talk to it only through the session inbox and
//! the per-client frame queue.

use std::collections::hash_map::RandomState;
use std::collections::HashMap;
use std::hash::{BuildHasher, Hasher};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use microworld::engine::ScenarioConfig;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::Message;

use crate::protocol::{decode_client, encode, error_frame, ClientMsg, ErrorCode, Role};
use crate::session::{ClientId, Frame, Session, SessionError, SessionOptions, SessionSummary};

#[derive(Debug, Clone, Copy)]
pub struct ServerOptions {
    pub max_clients: usize,
    /// Frames buffered per client before it counts as lagging.
    pub queue_depth: usize,
    /// Start ticking as soon as the session is created instead of waiting
    /// for the facilitator to resume.
    pub autostart: bool,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            max_clients: 40,
            queue_depth: 256,
            autostart: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionInfo {
    pub id: String,
    pub key: String,
}

enum Event {
    Join {
        client: ClientId,
        name: String,
        key: Option<String>,
        tx: mpsc::Sender<Frame>,
        reply: oneshot::Sender<Result<Role, ()>>,
    },
    Msg {
        client: ClientId,
        msg: ClientMsg,
    },
    Leave {
        client: ClientId,
    },
    Close {
        reply: oneshot::Sender<SessionSummary>,
    },
}

struct Handle {
    inbox: mpsc::Sender<Event>,
    task: JoinHandle<()>,
}

pub struct Server {
    options: ServerOptions,
    sessions: Mutex<HashMap<String, Handle>>,
    next_session: AtomicU64,
    next_client: AtomicU64,
}

fn random_key() -> String {
    let mut h = RandomState::new().build_hasher();
    h.write_u128(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or_default(),
    );
    format!("{:016x}", h.finish())
}

impl Server {
    pub fn new(options: ServerOptions) -> Arc<Self> {
        Arc::new(Self {
            options,
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
            next_client: AtomicU64::new(1),
        })
    }

    /// Creates a session and starts its tick task. Must be called inside a
    /// tokio runtime. Without `key` a random passphrase is generated.
    pub fn create_session(
        &self,
        config: ScenarioConfig,
        tick_rate_hz: u32,
        key: Option<String>,
        log_path: Option<PathBuf>,
    ) -> Result<SessionInfo, SessionError> {
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::Relaxed));
        let key = key.unwrap_or_else(random_key);
        let mut session = Session::new(
            id.clone(),
            key.clone(),
            config,
            tick_rate_hz,
            SessionOptions {
                max_clients: self.options.max_clients,
            },
        )?;
        if let Some(path) = &log_path {
            session.record_to(path)?;
        }
        if self.options.autostart {
            session.start();
        }
        let (inbox, events) = mpsc::channel(1024);
        let task = tokio::spawn(run_session(session, events));
        self.sessions
            .lock()
            .expect("session registry poisoned")
            .insert(id.clone(), Handle { inbox, task });
        Ok(SessionInfo { id, key })
    }

    fn inbox(&self, id: &str) -> Option<mpsc::Sender<Event>> {
        self.sessions
            .lock()
            .expect("session registry poisoned")
            .get(id)
            .map(|h| h.inbox.clone())
    }

    /// Stops a session, writing the end marker to its log.
    pub async fn close_session(&self, id: &str) -> Option<SessionSummary> {
        let handle = self.sessions.lock().expect("session registry poisoned").remove(id)?;
        let (reply, rx) = oneshot::channel();
        handle.inbox.send(Event::Close { reply }).await.ok()?;
        let summary = rx.await.ok();
        let _ = handle.task.await;
        summary
    }

    pub async fn shutdown(&self) -> Vec<SessionSummary> {
        let mut ids: Vec<String> = self
            .sessions
            .lock()
            .expect("session registry poisoned")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        let mut out = Vec::new();
        for id in ids {
            if let Some(s) = self.close_session(&id).await {
                out.push(s);
            }
        }
        out
    }

    /// Accepts WebSocket connections until the listener fails.
    pub async fn serve(self: Arc<Self>, listener: TcpListener) -> std::io::Result<()> {
        loop {
            let (stream, peer) = listener.accept().await?;
            let server = Arc::clone(&self);
            tokio::spawn(async move {
                if let Err(e) = server.connection(stream, peer).await {
                    tracing::debug!(%peer, "connection ended: {e}");
                }
            });
        }
    }

    async fn connection(
        &self,
        stream: TcpStream,
        peer: SocketAddr,
    ) -> Result<(), tokio_tungstenite::tungstenite::Error> {
        let ws = tokio_tungstenite::accept_async(stream).await?;
        tracing::debug!(%peer, "client connected");
        let (mut sink, mut source) = ws.split();
        let (tx, mut rx) = mpsc::channel::<Frame>(self.options.queue_depth);
        // held only until a join succeeds, so the queue closes with the session
        let mut tx = Some(tx);
        let client = self.next_client.fetch_add(1, Ordering::Relaxed);
        let mut joined: Option<mpsc::Sender<Event>> = None;
        let err = |code, msg: String| Message::text(encode(&error_frame(code, msg)));
        let result = loop {
            tokio::select! {
                frame = rx.recv() => {
                    let Some(frame) = frame else { break Ok(()) };
                    if let Err(e) = sink.send(Message::text(frame.to_string())).await {
                        break Err(e);
                    }
                }
                incoming = source.next() => {
                    let text = match incoming {
                        None => break Ok(()),
                        Some(Err(e)) => break Err(e),
                        Some(Ok(Message::Text(t))) => t,
                        Some(Ok(Message::Close(_))) => break Ok(()),
                        Some(Ok(Message::Binary(_))) => {
                            sink.send(err(ErrorCode::BadFrame, "binary frames are not accepted".into())).await?;
                            continue;
                        }
                        Some(Ok(_)) => continue,
                    };
                    let msg = match decode_client(&text) {
                        Ok(m) => m,
                        Err(e) => {
                            sink.send(err(e.code(), e.to_string())).await?;
                            continue;
                        }
                    };
                    match (msg, &joined) {
                        (ClientMsg::Join { .. }, Some(_)) => {
                            sink.send(err(ErrorCode::AlreadyJoined, "already joined".into())).await?;
                        }
                        (ClientMsg::Join { session, name, key }, None) => {
                            let Some(inbox) = self.inbox(&session) else {
                                sink.send(err(ErrorCode::UnknownSession, format!("no session `{session}`"))).await?;
                                continue;
                            };
                            let Some(sender) = tx.clone() else { continue };
                            let (reply, accepted) = oneshot::channel();
                            let event = Event::Join { client, name, key, tx: sender, reply };
                            if inbox.send(event).await.is_err() {
                                sink.send(err(ErrorCode::UnknownSession, format!("session `{session}` has closed"))).await?;
                                continue;
                            }
                            if let Ok(Ok(_)) = accepted.await {
                                tx = None;
                                joined = Some(inbox);
                            }
                        }
                        (msg, Some(inbox)) => {
                            if inbox.send(Event::Msg { client, msg }).await.is_err() {
                                break Ok(());
                            }
                        }
                        (_, None) => {
                            sink.send(err(ErrorCode::NotJoined, "join a session first".into())).await?;
                        }
                    }
                }
            }
        };
        if let Some(inbox) = joined {
            let _ = inbox.send(Event::Leave { client }).await;
        }
        // deliver anything the session queued before the socket closes
        while let Ok(frame) = rx.try_recv() {
            if sink.send(Message::text(frame.to_string())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
        result
    }
}

async fn run_session(mut session: Session, mut events: mpsc::Receiver<Event>) {
    let period = Duration::from_secs_f64(1.0 / session.tick_rate_hz() as f64);
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            event = events.recv() => match event {
                None => break,
                Some(Event::Join { client, name, key, tx, reply }) => {
                    let r = session.join(client, &name, key.as_deref(), tx).map_err(|_| ());
                    let _ = reply.send(r);
                }
                Some(Event::Msg { client, msg }) => {
                    if let Err(e) = session.handle(client, msg) {
                        tracing::debug!(session = session.id(), client, "rejected: {e}");
                    }
                }
                Some(Event::Leave { client }) => session.leave(client),
                Some(Event::Close { reply }) => {
                    let _ = reply.send(session.finish());
                    break;
                }
            },
            _ = interval.tick() => {
                session.boundary();
            }
        }
    }
}
