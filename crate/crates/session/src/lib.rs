//! Networked participatory sessions: each participant steers one ant, the
//! facilitator commits menu choices, and the server advances the engine in
//! lockstep and broadcasts authoritative state.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{decode_client, decode_server, ClientMsg, ErrorCode, Role, ServerMsg, SessionState};
pub use server::{Server, ServerOptions, SessionInfo};
pub use session::{ClientId, Frame, Session, SessionError, SessionOptions, SessionSummary};
