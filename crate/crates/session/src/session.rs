//! Synchronous session core: roles, steering inbox, menus and the tick
//! boundary. The network layer feeds it events and drains the per-client
//! queues; nothing here blocks.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use microworld::ants::SteerAction;
use microworld::engine::catalog::find_option;
use microworld::engine::log::LogHeader;
use microworld::engine::{menus_for, EngineError, EngineInstance, LogEntry, ScenarioConfig, StateHash};
use tokio::sync::mpsc::error::TrySendError;
use tokio::sync::mpsc::Sender;

use crate::protocol::{
    encode, error_frame, ClientMsg, Delta, ErrorCode, MenuOptionView, Role, ServerMsg, SessionState,
};

pub type ClientId = u64;

/// A serialized server message shared by every recipient.
pub type Frame = Arc<str>;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("tick rate must be between 1 and 60 Hz, got {0}")]
    TickRate(u32),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{msg}")]
    Rejected { code: ErrorCode, msg: String },
    #[error("command log: {0}")]
    Io(#[from] std::io::Error),
}

impl SessionError {
    fn rejected(code: ErrorCode, msg: impl Into<String>) -> Self {
        SessionError::Rejected {
            code,
            msg: msg.into(),
        }
    }

    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            SessionError::Rejected { code, .. } => Some(*code),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SessionOptions {
    /// Connected clients of every role.
    pub max_clients: usize,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self { max_clients: 40 }
    }
}

#[derive(Debug)]
struct Client {
    name: String,
    role: Role,
    agent: Option<u32>,
    tx: Sender<Frame>,
    /// Missed a delta; the next frame that fits is a full snapshot.
    stale: bool,
}

struct LogSink {
    out: BufWriter<File>,
}

impl LogSink {
    fn create(path: &Path, scenario: &str) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", encode(&LogHeader::new(scenario)))?;
        out.flush()?;
        Ok(Self { out })
    }

    fn write(&mut self, entry: &LogEntry) -> std::io::Result<()> {
        writeln!(self.out, "{}", encode(entry))
    }
}

pub struct Session {
    id: String,
    key: String,
    engine: EngineInstance,
    state: SessionState,
    tick_rate_hz: u32,
    options: SessionOptions,
    clients: BTreeMap<ClientId, Client>,
    pending: BTreeMap<u32, SteerAction>,
    pending_releases: Vec<u32>,
    votes: BTreeMap<String, BTreeMap<ClientId, String>>,
    selected: BTreeMap<String, String>,
    log: Vec<LogEntry>,
    sink: Option<LogSink>,
}

/// Final state reported when a session closes.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSummary {
    pub id: String,
    pub hash: StateHash,
    pub clock: u64,
    pub log: Vec<LogEntry>,
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        key: impl Into<String>,
        config: ScenarioConfig,
        tick_rate_hz: u32,
        options: SessionOptions,
    ) -> Result<Self, SessionError> {
        if !(1..=60).contains(&tick_rate_hz) {
            return Err(SessionError::TickRate(tick_rate_hz));
        }
        Ok(Self {
            id: id.into(),
            key: key.into(),
            engine: EngineInstance::new(config)?,
            state: SessionState::Lobby,
            tick_rate_hz,
            options,
            clients: BTreeMap::new(),
            pending: BTreeMap::new(),
            pending_releases: Vec::new(),
            votes: BTreeMap::new(),
            selected: BTreeMap::new(),
            log: Vec::new(),
            sink: None,
        })
    }

    /// Streams the command log to `path` as it grows.
    pub fn record_to(&mut self, path: &Path) -> Result<(), SessionError> {
        let name = self.engine.config().name.clone().unwrap_or_default();
        let mut sink = LogSink::create(path, &name)?;
        for e in &self.log {
            sink.write(e)?;
        }
        self.sink = Some(sink);
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn tick_rate_hz(&self) -> u32 {
        self.tick_rate_hz
    }

    pub fn engine(&self) -> &EngineInstance {
        &self.engine
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn agent_of(&self, client: ClientId) -> Option<u32> {
        self.clients.get(&client).and_then(|c| c.agent)
    }

    pub fn role_of(&self, client: ClientId) -> Option<Role> {
        self.clients.get(&client).map(|c| c.role)
    }

    /// Agents a participant may still claim.
    pub fn free_agents(&self) -> Vec<u32> {
        (0..self.engine.steerable_agents())
            .filter(|a| !self.clients.values().any(|c| c.agent == Some(*a)))
            .collect()
    }

    fn record(&mut self, entry: LogEntry) {
        if let Some(sink) = &mut self.sink {
            if let Err(e) = sink.write(&entry) {
                tracing::error!(session = %self.id, "command log write failed: {e}");
            }
        }
        self.log.push(entry);
    }

    fn send_to(&mut self, client: ClientId, msg: &ServerMsg) {
        if let Some(c) = self.clients.get(&client) {
            let _ = c.tx.try_send(Frame::from(encode(msg)));
        }
    }

    fn reject(&mut self, client: ClientId, code: ErrorCode, msg: impl Into<String>) -> SessionError {
        let msg = msg.into();
        self.send_to(client, &error_frame(code, msg.clone()));
        SessionError::rejected(code, msg)
    }

    fn broadcast(&mut self, msg: &ServerMsg, except: Option<ClientId>) {
        let frame = Frame::from(encode(msg));
        for (id, c) in &self.clients {
            if Some(*id) != except {
                let _ = c.tx.try_send(frame.clone());
            }
        }
    }

    fn snapshot_frame(&self) -> Frame {
        Frame::from(encode(&ServerMsg::Snapshot {
            snapshot: self.engine.snapshot(),
        }))
    }

    fn menu_frames(&self) -> Vec<ServerMsg> {
        menus_for(self.engine.config().kind())
            .into_iter()
            .map(|m| {
                let mut tally: BTreeMap<String, u32> =
                    m.options.iter().map(|o| (o.id.to_string(), 0)).collect();
                for option in self.votes.get(m.id).into_iter().flat_map(|v| v.values()) {
                    *tally.entry(option.clone()).or_default() += 1;
                }
                ServerMsg::Menu {
                    id: m.id.to_string(),
                    title: m.title.to_string(),
                    options: m
                        .options
                        .iter()
                        .map(|o| MenuOptionView {
                            id: o.id.to_string(),
                            label: o.label.to_string(),
                        })
                        .collect(),
                    tally,
                    selected: self.selected.get(m.id).cloned(),
                }
            })
            .collect()
    }

    fn menu_frame(&self, menu: &str) -> Option<ServerMsg> {
        self.menu_frames()
            .into_iter()
            .find(|m| matches!(m, ServerMsg::Menu { id, .. } if id == menu))
    }

    /// Admits a client. On failure an error frame is queued on `tx`.
    pub fn join(
        &mut self,
        client: ClientId,
        name: &str,
        key: Option<&str>,
        tx: Sender<Frame>,
    ) -> Result<Role, SessionError> {
        let refuse = |code, msg: String| {
            let _ = tx.try_send(Frame::from(encode(&error_frame(code, msg.clone()))));
            Err(SessionError::rejected(code, msg))
        };
        if self.clients.contains_key(&client) {
            return refuse(ErrorCode::AlreadyJoined, "already joined".into());
        }
        if self.clients.values().any(|c| c.name == name) {
            return refuse(ErrorCode::DuplicateName, format!("name `{name}` is taken"));
        }
        if self.clients.len() >= self.options.max_clients {
            return refuse(ErrorCode::SessionFull, format!("session is full ({} clients)", self.options.max_clients));
        }
        let (role, agent) = match key {
            Some(k) if k != self.key => return refuse(ErrorCode::BadKey, "wrong session key".into()),
            Some(_) if self.clients.values().any(|c| c.role == Role::Facilitator) => {
                return refuse(ErrorCode::FacilitatorTaken, "a facilitator is already connected".into())
            }
            Some(_) => (Role::Facilitator, None),
            None => match self.free_agents().first() {
                Some(a) => (Role::Participant, Some(*a)),
                None => (Role::Observer, None),
            },
        };
        self.clients.insert(
            client,
            Client {
                name: name.to_string(),
                role,
                agent,
                tx,
                stale: false,
            },
        );
        let welcome = ServerMsg::Welcome {
            session: self.id.clone(),
            agent,
            role,
            snapshot: self.engine.snapshot(),
        };
        self.send_to(client, &welcome);
        self.send_to(client, &ServerMsg::State { state: self.state });
        for m in self.menu_frames() {
            self.send_to(client, &m);
        }
        self.broadcast(
            &ServerMsg::Joined {
                name: name.to_string(),
                agent,
                role,
            },
            Some(client),
        );
        Ok(role)
    }

    /// Removes a client. Its agent returns to autonomous motion at the next
    /// tick boundary.
    pub fn leave(&mut self, client: ClientId) {
        let Some(c) = self.clients.remove(&client) else { return };
        if let Some(a) = c.agent {
            self.pending.remove(&a);
            self.pending_releases.push(a);
        }
        let mut changed = Vec::new();
        for (menu, votes) in &mut self.votes {
            if votes.remove(&client).is_some() {
                changed.push(menu.clone());
            }
        }
        self.broadcast(
            &ServerMsg::Left {
                name: c.name,
                agent: c.agent,
            },
            None,
        );
        for menu in changed {
            if let Some(m) = self.menu_frame(&menu) {
                self.broadcast(&m, None);
            }
        }
    }

    pub fn handle(&mut self, client: ClientId, msg: ClientMsg) -> Result<(), SessionError> {
        let Some(role) = self.role_of(client) else {
            return Err(SessionError::rejected(ErrorCode::NotJoined, "join first"));
        };
        match msg {
            ClientMsg::Join { .. } => Err(self.reject(client, ErrorCode::AlreadyJoined, "already joined")),
            ClientMsg::Cmd { agent, action } => {
                if self.state != SessionState::Running {
                    return Err(self.reject(client, ErrorCode::NotRunning, "session is not running"));
                }
                if self.agent_of(client) != Some(agent) {
                    return Err(self.reject(
                        client,
                        ErrorCode::Ownership,
                        format!("agent {agent} is not yours"),
                    ));
                }
                self.pending.insert(agent, action);
                self.send_to(
                    client,
                    &ServerMsg::Ack {
                        applies_at: self.engine.clock() + 1,
                    },
                );
                Ok(())
            }
            ClientMsg::Vote { menu, option } => {
                if let Err(e) = self.check_option(&menu, &option) {
                    return Err(self.reject(client, ErrorCode::UnknownOption, e));
                }
                self.votes.entry(menu.clone()).or_default().insert(client, option);
                if let Some(m) = self.menu_frame(&menu) {
                    self.broadcast(&m, None);
                }
                Ok(())
            }
            ClientMsg::Choice { menu, option } => {
                if role != Role::Facilitator {
                    return Err(self.reject(client, ErrorCode::Role, "only the facilitator commits choices"));
                }
                if let Err(e) = self.engine.apply_choice(&menu, &option) {
                    return Err(self.reject(client, ErrorCode::UnknownOption, e.to_string()));
                }
                let at = self.engine.clock();
                self.record(LogEntry::Choice {
                    at,
                    menu: menu.clone(),
                    option: option.clone(),
                });
                self.selected.insert(menu.clone(), option.clone());
                self.votes.remove(&menu);
                let restart = ServerMsg::Restart {
                    menu: menu.clone(),
                    option,
                    config: self.engine.config().to_value(),
                };
                self.broadcast(&restart, None);
                let snap = self.snapshot_frame();
                for c in self.clients.values_mut() {
                    c.stale = c.tx.try_send(snap.clone()).is_err();
                }
                if let Some(m) = self.menu_frame(&menu) {
                    self.broadcast(&m, None);
                }
                Ok(())
            }
            ClientMsg::Pause | ClientMsg::Resume => {
                if role != Role::Facilitator {
                    return Err(self.reject(client, ErrorCode::Role, "only the facilitator pauses and resumes"));
                }
                self.state = if msg == ClientMsg::Pause {
                    match self.state {
                        SessionState::Running => SessionState::Paused,
                        s => s,
                    }
                } else {
                    SessionState::Running
                };
                self.broadcast(&ServerMsg::State { state: self.state }, None);
                Ok(())
            }
        }
    }

    fn check_option(&self, menu: &str, option: &str) -> Result<(), String> {
        let (m, _) = find_option(menu, option).map_err(|e| e.to_string())?;
        if m.model != self.engine.config().kind() {
            return Err(format!("menu `{menu}` does not apply to this model"));
        }
        Ok(())
    }

    pub fn start(&mut self) {
        self.state = SessionState::Running;
        self.broadcast(&ServerMsg::State { state: self.state }, None);
    }

    /// Runs one tick boundary if the session is running: releases, then the
    /// buffered steering, then the engine tick, then the broadcast.
    pub fn boundary(&mut self) -> bool {
        if self.state != SessionState::Running {
            return false;
        }
        let at = self.engine.clock();
        for agent in std::mem::take(&mut self.pending_releases) {
            // a fire model has no agents to release
            let _ = self.engine.release(agent);
            self.record(LogEntry::Release { at, agent });
        }
        let steering = std::mem::take(&mut self.pending);
        for (agent, action) in &steering {
            self.record(LogEntry::Command {
                at,
                agent: *agent,
                action: *action,
            });
        }
        let report = self.engine.tick_with(&steering);
        if let Some(sink) = &mut self.sink {
            if let Err(e) = sink.out.flush() {
                tracing::error!(session = %self.id, "command log flush failed: {e}");
            }
        }
        let tick = Frame::from(encode(&ServerMsg::Tick {
            n: report.clock,
            tick: report.tick,
            finished: report.finished,
            hash: self.engine.state_hash(),
            delta: Delta {
                cells: report.changed_cells,
                agents: report.agent_positions,
                metrics: report
                    .metrics
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect(),
            },
        }));
        let mut snapshot: Option<Frame> = None;
        for c in self.clients.values_mut() {
            let frame = if c.stale {
                snapshot
                    .get_or_insert_with(|| {
                        Frame::from(encode(&ServerMsg::Snapshot {
                            snapshot: self.engine.snapshot(),
                        }))
                    })
                    .clone()
            } else {
                tick.clone()
            };
            match c.tx.try_send(frame) {
                Ok(()) => c.stale = false,
                Err(TrySendError::Full(_)) => c.stale = true,
                Err(TrySendError::Closed(_)) => {}
            }
        }
        true
    }

    /// Closes the log with an end marker and reports the final state.
    pub fn finish(&mut self) -> SessionSummary {
        let at = self.engine.clock();
        let hash = self.engine.state_hash();
        self.record(LogEntry::End { at, hash });
        if let Some(sink) = &mut self.sink {
            if let Err(e) = sink.out.flush() {
                tracing::error!(session = %self.id, "command log flush failed: {e}");
            }
        }
        SessionSummary {
            id: self.id.clone(),
            hash,
            clock: at,
            log: self.log.clone(),
        }
    }
}
