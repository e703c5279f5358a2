//! JSON wire messages. Every WebSocket text frame carries exactly one
//! message, tagged by `"t"`.

use std::collections::BTreeMap;

use microworld::ants::SteerAction;
use microworld::engine::{AgentView, CellChange, Snapshot, StateHash};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMsg {
    Join {
        session: String,
        name: String,
        /// Session passphrase; joining with it grants the facilitator role.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        key: Option<String>,
    },
    Cmd {
        agent: u32,
        action: SteerAction,
    },
    Choice {
        menu: String,
        option: String,
    },
    Vote {
        menu: String,
        option: String,
    },
    Pause,
    Resume,
}

const CLIENT_TYPES: [&str; 6] = ["join", "cmd", "choice", "vote", "pause", "resume"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Facilitator,
    Participant,
    Observer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub cells: Vec<CellChange>,
    pub agents: Vec<AgentView>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuOptionView {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum ServerMsg {
    Welcome {
        session: String,
        agent: Option<u32>,
        role: Role,
        snapshot: Snapshot,
    },
    Joined {
        name: String,
        agent: Option<u32>,
        role: Role,
    },
    Left {
        name: String,
        agent: Option<u32>,
    },
    /// `n` is the session clock, which only ever increases.
    Tick {
        n: u64,
        tick: u64,
        finished: bool,
        hash: StateHash,
        delta: Delta,
    },
    Snapshot {
        snapshot: Snapshot,
    },
    Menu {
        id: String,
        title: String,
        options: Vec<MenuOptionView>,
        tally: BTreeMap<String, u32>,
        selected: Option<String>,
    },
    Restart {
        menu: String,
        option: String,
        config: Value,
    },
    State {
        state: SessionState,
    },
    /// A command was buffered; its effect first shows in tick frame `applies_at`.
    Ack {
        applies_at: u64,
    },
    Err {
        code: ErrorCode,
        msg: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Lobby,
    Running,
    Paused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadFrame,
    UnknownType,
    UnknownSession,
    DuplicateName,
    SessionFull,
    NotJoined,
    AlreadyJoined,
    BadKey,
    FacilitatorTaken,
    Ownership,
    NotRunning,
    Role,
    UnknownOption,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("frame is not a JSON object with a string `t` field")]
    NotAMessage,
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("malformed `{t}` message: {message}")]
    Malformed { t: String, message: String },
}

impl ProtocolError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ProtocolError::UnknownType(_) => ErrorCode::UnknownType,
            _ => ErrorCode::BadFrame,
        }
    }
}

/// Parses one client frame, rejecting unknown types.
pub fn decode_client(text: &str) -> Result<ClientMsg, ProtocolError> {
    let value: Value = serde_json::from_str(text).map_err(|_| ProtocolError::NotAMessage)?;
    let t = value
        .get("t")
        .and_then(Value::as_str)
        .ok_or(ProtocolError::NotAMessage)?
        .to_string();
    if !CLIENT_TYPES.contains(&t.as_str()) {
        return Err(ProtocolError::UnknownType(t));
    }
    let msg: ClientMsg = serde_json::from_value(value).map_err(|e| ProtocolError::Malformed {
        t: t.clone(),
        message: e.to_string(),
    })?;
    if let ClientMsg::Cmd {
        action: SteerAction::SetHeading { degrees },
        ..
    } = &msg
    {
        if !degrees.is_finite() {
            return Err(ProtocolError::Malformed {
                t,
                message: "degrees must be finite".into(),
            });
        }
    }
    Ok(msg)
}

pub fn decode_server(text: &str) -> Result<ServerMsg, ProtocolError> {
    serde_json::from_str(text).map_err(|e| ProtocolError::Malformed {
        t: "server".into(),
        message: e.to_string(),
    })
}

pub fn encode<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(msg).expect("wire messages serialize")
}

pub fn error_frame(code: ErrorCode, msg: impl Into<String>) -> ServerMsg {
    ServerMsg::Err {
        code,
        msg: msg.into(),
    }
}
