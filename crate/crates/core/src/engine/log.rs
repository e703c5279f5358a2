//! Command logs: one JSON document per line.
//!
//! The first line is a header, `{"schema_version":1,"scenario":"<name>"}`.
//! Every further line is an entry tagged by `type`, with `at` giving the
//! engine clock at which it took effect:
//!
//! ```text
//! {"type":"choice","at":0,"menu":"QF3","option":"c"}
//! {"type":"command","at":4,"agent":1,"action":{"kind":"turn_left"}}
//! {"type":"release","at":9,"agent":1}
//! {"type":"end","at":12,"hash":"5f1c0b0e2d9a4471"}
//! ```
//!
//! At a boundary with clock `c`, entries with `at == c` apply in this order:
//! choices, then releases, then the commands (the last command per agent wins)
//! steer the tick that moves the clock to `c + 1`. An `end` entry stops
//! replay at its clock, before any tick there.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EngineError, EngineInstance, ScenarioConfig, StateHash};
use crate::ants::SteerAction;

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub schema_version: u32,
    #[serde(default)]
    pub scenario: String,
}

impl LogHeader {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            schema_version: LOG_SCHEMA_VERSION,
            scenario: scenario.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LogEntry {
    Command {
        at: u64,
        agent: u32,
        action: SteerAction,
    },
    Choice {
        at: u64,
        menu: String,
        option: String,
    },
    Release {
        at: u64,
        agent: u32,
    },
    End {
        at: u64,
        hash: StateHash,
    },
}

impl LogEntry {
    pub fn at(&self) -> u64 {
        match self {
            LogEntry::Command { at, .. }
            | LogEntry::Choice { at, .. }
            | LogEntry::Release { at, .. }
            | LogEntry::End { at, .. } => *at,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unsupported log schema_version {0}")]
    SchemaVersion(u32),
    #[error("line {line}: entry at {at} follows an entry at {previous}")]
    OutOfOrder { line: usize, at: u64, previous: u64 },
    #[error("line {line}: entry after the end marker")]
    AfterEnd { line: usize },
    #[error("choice at {at}: {source}")]
    Choice {
        at: u64,
        #[source]
        source: EngineError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandLog {
    pub header: Option<LogHeader>,
    pub entries: Vec<LogEntry>,
}

impl CommandLog {
    pub fn claimed_hash(&self) -> Option<StateHash> {
        match self.entries.last() {
            Some(LogEntry::End { hash, .. }) => Some(*hash),
            _ => None,
        }
    }
}

/// Parses a log. An empty document is a valid log with no entries.
pub fn parse_log(text: &str) -> Result<CommandLog, LogError> {
    let mut log = CommandLog::default();
    let mut previous = 0u64;
    let mut ended = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let syntax = |e: serde_json::Error| LogError::Syntax {
            line,
            message: e.to_string(),
        };
        if log.header.is_none() && log.entries.is_empty() {
            let header: LogHeader = serde_json::from_str(raw).map_err(syntax)?;
            if header.schema_version != LOG_SCHEMA_VERSION {
                return Err(LogError::SchemaVersion(header.schema_version));
            }
            log.header = Some(header);
            continue;
        }
        if ended {
            return Err(LogError::AfterEnd { line });
        }
        let entry: LogEntry = serde_json::from_str(raw).map_err(syntax)?;
        let at = entry.at();
        if at < previous {
            return Err(LogError::OutOfOrder { line, at, previous });
        }
        if let LogEntry::Command { action: SteerAction::SetHeading { degrees }, .. } = &entry {
            if !degrees.is_finite() {
                return Err(LogError::Syntax {
                    line,
                    message: "set_heading degrees must be finite".into(),
                });
            }
        }
        previous = at;
        ended = matches!(entry, LogEntry::End { .. });
        log.entries.push(entry);
    }
    Ok(log)
}

pub fn read_log<R: BufRead>(mut reader: R) -> Result<CommandLog, LogError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_log(&text)
}

pub fn write_log<W: Write>(mut out: W, header: &LogHeader, entries: &[LogEntry]) -> std::io::Result<()> {
    writeln!(out, "{}", serde_json::to_string(header)?)?;
    for e in entries {
        writeln!(out, "{}", serde_json::to_string(e)?)?;
    }
    out.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub hash: StateHash,
    pub claimed: Option<StateHash>,
    pub clock: u64,
}

impl ReplayOutcome {
    /// True iff the log claims a hash and the replay reproduced it.
    pub fn verified(&self) -> bool {
        self.claimed == Some(self.hash)
    }
}

/// Re-executes `log` against a fresh engine. Without an end marker the run
/// continues until the model finishes.
pub fn replay(config: &ScenarioConfig, log: &CommandLog) -> Result<ReplayOutcome, LogError> {
    let mut engine = EngineInstance::new(config.clone()).map_err(|source| LogError::Choice { at: 0, source })?;
    let mut entries = log.entries.iter().peekable();
    while let Some(first) = entries.peek() {
        let at = first.at();
        while engine.clock() < at {
            engine.tick();
        }
        let mut steering = BTreeMap::new();
        let mut releases = Vec::new();
        let mut end = None;
        while let Some(e) = entries.next_if(|e| e.at() == at) {
            match e {
                LogEntry::Choice { menu, option, .. } => engine
                    .apply_choice(menu, option)
                    .map_err(|source| LogError::Choice { at, source })?,
                LogEntry::Release { agent, .. } => releases.push(*agent),
                LogEntry::Command { agent, action, .. } => {
                    steering.insert(*agent, *action);
                }
                LogEntry::End { hash, .. } => end = Some(*hash),
            }
        }
        for agent in releases {
            // Releasing an agent the model lacks is a no-op.
            let _ = engine.release(agent);
        }
        if end.is_some() {
            return Ok(ReplayOutcome {
                hash: engine.state_hash(),
                claimed: end,
                clock: engine.clock(),
            });
        }
        engine.tick_with(&steering);
    }
    let hash = engine.run_to_end();
    Ok(ReplayOutcome {
        hash,
        claimed: None,
        clock: engine.clock(),
    })
}
