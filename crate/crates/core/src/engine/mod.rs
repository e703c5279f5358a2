//! Tick scheduler shared by the CLI and the session server.
//!
//! An [`EngineInstance`] owns one scenario, its model state and its random
//! stream. Two counters are kept apart:
//!
//! - the model tick, which restarts at 0 whenever a menu choice is applied;
//! - the clock, which counts every call to [`EngineInstance::tick`] and never
//!   goes backwards. Command logs and broadcasts are keyed by the clock.
//!
//! State hashes cover the model only: patches row-major, then agents by id,
//! then the model counters, then the generator's seed and position. They do
//! not cover the clock or the configuration.

pub mod catalog;
pub mod log;
pub mod scenario;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ants::{init_ants, step_ants, AntEvent, AntsError, AntsParams, AntsState, AntsVariant, SteerAction};
use crate::fire::{init_fire, step_fire, FireState, FireVariant, PatchFireState};
use crate::world::RngState;

pub use catalog::{catalog, menus_for, ChoiceError, ChoiceMenu, ChoiceOption};
pub use log::{parse_log, replay, write_log, LogEntry, LogError, ReplayOutcome};
pub use scenario::{load_scenario, shipped, ModelConfig, ModelKind, ScenarioConfig, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
    #[error(transparent)]
    Ants(#[from] AntsError),
    #[error("agent {0} does not exist")]
    UnknownAgent(u32),
}

/// 64-bit digest of the canonical state bytes (leading bytes of SHA-256).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateHash(pub u64);

impl fmt::Display for StateHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for StateHash {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(StateHash)
    }
}

impl Serialize for StateHash {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateHash {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Fire(FireState),
    Ants(AntsState),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub tick: u64,
    pub metric: &'static str,
    pub value: f64,
}

pub const FIRE_METRICS: [&str; 2] = ["percent_burned", "burning_count"];
pub const ANTS_METRICS: [&str; 3] = ["delivered", "total_pheromone", "out_ants"];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Restart { menu: String, option: String },
    Steer { agent: u32, action: SteerAction },
    Release { agent: u32 },
    Exit { ant: u32, heading: f64 },
    Pickup { ant: u32, x: i32, y: i32 },
    Delivery { ant: u32, entry_heading: f64 },
    CarrierMet { ant: u32, carrier: u32 },
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineEvent {
    pub clock: u64,
    pub tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// One patch that changed since the previous tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellChange {
    pub x: i32,
    pub y: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fire: Option<PatchFireState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub food: Option<u32>,
    /// Pheromone intensity 0..=255, saturating at the visibility threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pheromone: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub id: u32,
    pub x: i32,
    pub y: i32,
    pub heading: f64,
    pub carrying: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickReport {
    pub clock: u64,
    pub tick: u64,
    /// False when the engine had already finished and nothing changed.
    pub advanced: bool,
    pub finished: bool,
    pub metrics: BTreeMap<&'static str, f64>,
    pub changed_cells: Vec<CellChange>,
    /// Ants outside the nest; empty for fire.
    pub agent_positions: Vec<AgentView>,
}

/// Full redraw state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub model: ModelKind,
    pub width: usize,
    pub height: usize,
    pub clock: u64,
    pub tick: u64,
    pub finished: bool,
    /// Fire: one state code per patch, row-major (0 empty, 1 tree, 2 burning,
    /// 3 burned). Ants: pheromone intensity per patch.
    pub cells: Vec<u8>,
    /// Ants only: patches holding food.
    pub food: Vec<CellChange>,
    pub agents: Vec<AgentView>,
    pub metrics: BTreeMap<String, f64>,
    pub hash: StateHash,
}

pub fn pheromone_level(value: f64, threshold: f64) -> u8 {
    if threshold <= 0.0 {
        return if value > 0.0 { 255 } else { 0 };
    }
    ((value / threshold).clamp(0.0, 1.0) * 255.0).round() as u8
}

#[derive(Debug, Clone)]
pub struct EngineInstance {
    config: ScenarioConfig,
    state: ModelState,
    rng: RngState,
    clock: u64,
    events: Vec<EngineEvent>,
    metrics: Vec<MetricRow>,
    /// Last broadcast pheromone levels, for ants deltas.
    shown_pheromone: Vec<u8>,
}

fn init_state(config: &ScenarioConfig, rng: &mut RngState) -> Result<ModelState, EngineError> {
    Ok(match &config.model {
        ModelConfig::Fire { variant, params } => {
            let v = variant.to_variant()?;
            ModelState::Fire(
                init_fire(config.width, config.height, params.density, &v, rng)
                    .map_err(|e| ScenarioError::Field {
                        field: "scenario".into(),
                        message: e.to_string(),
                    })?,
            )
        }
        ModelConfig::Ants {
            variant,
            params,
            layout,
        } => ModelState::Ants(init_ants(
            config.width,
            config.height,
            layout.n_ants,
            &layout.food,
            config.nest().expect("ants config has a nest"),
            variant,
            params,
            rng,
        )?),
    })
}

impl EngineInstance {
    pub fn new(config: ScenarioConfig) -> Result<Self, EngineError> {
        let mut rng = RngState::new(config.seed);
        let state = init_state(&config, &mut rng)?;
        let mut engine = Self {
            config,
            state,
            rng,
            clock: 0,
            events: Vec::new(),
            metrics: Vec::new(),
            shown_pheromone: Vec::new(),
        };
        engine.shown_pheromone = engine.pheromone_levels();
        Ok(engine)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn rng(&self) -> RngState {
        self.rng
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn model_tick(&self) -> u64 {
        match &self.state {
            ModelState::Fire(s) => s.tick(),
            ModelState::Ants(s) => s.tick(),
        }
    }

    pub fn events(&self) -> &[EngineEvent] {
        &self.events
    }

    /// Number of agents a participant can steer: the ants, or none for fire.
    pub fn steerable_agents(&self) -> u32 {
        match &self.state {
            ModelState::Ants(s) => s.ants().len() as u32,
            ModelState::Fire(_) => 0,
        }
    }

    pub fn is_finished(&self) -> bool {
        let done = match &self.state {
            ModelState::Fire(s) => s.is_quiescent(),
            ModelState::Ants(s) => s.is_finished(),
        };
        done || self.model_tick() >= self.config.max_ticks
    }

    fn fire_variant(&self) -> FireVariant {
        match &self.config.model {
            ModelConfig::Fire { variant, .. } => variant.to_variant().expect("validated"),
            ModelConfig::Ants { .. } => unreachable!("fire variant of an ants scenario"),
        }
    }

    fn ants_setup(&self) -> (AntsVariant, AntsParams) {
        match &self.config.model {
            ModelConfig::Ants { variant, params, .. } => (*variant, *params),
            ModelConfig::Fire { .. } => unreachable!("ants variant of a fire scenario"),
        }
    }

    fn log(&mut self, kind: EventKind) {
        let tick = self.model_tick();
        self.events.push(EngineEvent {
            clock: self.clock,
            tick,
            kind,
        });
    }

    pub fn current_metrics(&self) -> BTreeMap<&'static str, f64> {
        match &self.state {
            ModelState::Fire(s) => BTreeMap::from([
                ("percent_burned", s.percent_burned()),
                ("burning_count", s.burning_count() as f64),
            ]),
            ModelState::Ants(s) => BTreeMap::from([
                ("delivered", s.delivered() as f64),
                ("total_pheromone", s.pheromone.total()),
                ("out_ants", s.out_ants() as f64),
            ]),
        }
    }

    fn metric_names(&self) -> &'static [&'static str] {
        match self.state {
            ModelState::Fire(_) => &FIRE_METRICS,
            ModelState::Ants(_) => &ANTS_METRICS,
        }
    }

    fn pheromone_levels(&self) -> Vec<u8> {
        match &self.state {
            ModelState::Ants(s) => {
                let threshold = self.ants_setup().1.visibility_threshold;
                s.pheromone
                    .values()
                    .iter()
                    .map(|v| pheromone_level(*v, threshold))
                    .collect()
            }
            ModelState::Fire(_) => Vec::new(),
        }
    }

    fn agent_views(&self) -> Vec<AgentView> {
        match &self.state {
            ModelState::Ants(s) => s
                .ants()
                .iter()
                .filter(|a| a.is_out())
                .map(|a| AgentView {
                    id: a.id,
                    x: a.pos.x,
                    y: a.pos.y,
                    heading: a.heading,
                    carrying: a.carrying,
                })
                .collect(),
            ModelState::Fire(_) => Vec::new(),
        }
    }

    /// Advances one tick without steering.
    pub fn tick(&mut self) -> TickReport {
        self.tick_with(&BTreeMap::new())
    }

    /// Advances one tick. Steering entries for ants that do not exist are
    /// ignored; fire engines ignore steering entirely.
    pub fn tick_with(&mut self, steering: &BTreeMap<u32, SteerAction>) -> TickReport {
        self.clock += 1;
        if self.is_finished() {
            return TickReport {
                clock: self.clock,
                tick: self.model_tick(),
                advanced: false,
                finished: true,
                metrics: self.current_metrics(),
                changed_cells: Vec::new(),
                agent_positions: self.agent_views(),
            };
        }
        let mut changed_cells = Vec::new();
        match &mut self.state {
            ModelState::Fire(s) => {
                let v = match &self.config.model {
                    ModelConfig::Fire { variant, .. } => variant.to_variant().expect("validated"),
                    ModelConfig::Ants { .. } => unreachable!(),
                };
                let step = step_fire(s, &v, &mut self.rng);
                changed_cells = step
                    .changed
                    .into_iter()
                    .map(|(p, st)| CellChange {
                        x: p.x,
                        y: p.y,
                        fire: Some(st),
                        food: None,
                        pheromone: None,
                    })
                    .collect();
            }
            ModelState::Ants(s) => {
                let (variant, params) = match &self.config.model {
                    ModelConfig::Ants { variant, params, .. } => (*variant, *params),
                    ModelConfig::Fire { .. } => unreachable!(),
                };
                let n = s.ants().len() as u32;
                let steering: BTreeMap<u32, SteerAction> =
                    steering.iter().filter(|(id, _)| **id < n).map(|(k, v)| (*k, *v)).collect();
                let step = step_ants(s, &variant, &params, &mut self.rng, &steering)
                    .expect("parameters validated at load");
                let mut food: BTreeMap<(i32, i32), u32> = BTreeMap::new();
                for (p, f) in step.food_changed {
                    food.insert((p.y, p.x), f);
                }
                let events: Vec<EventKind> = steering
                    .iter()
                    .map(|(agent, action)| EventKind::Steer {
                        agent: *agent,
                        action: *action,
                    })
                    .chain(step.events.into_iter().map(|e| match e {
                        AntEvent::Exit { ant, heading } => EventKind::Exit { ant, heading },
                        AntEvent::Pickup { ant, pos } => EventKind::Pickup {
                            ant,
                            x: pos.x,
                            y: pos.y,
                        },
                        AntEvent::Delivery { ant, entry_heading } => {
                            EventKind::Delivery { ant, entry_heading }
                        }
                        AntEvent::CarrierMet { ant, carrier } => {
                            EventKind::CarrierMet { ant, carrier }
                        }
                    }))
                    .collect();
                let levels = self.pheromone_levels();
                let lattice = match &self.state {
                    ModelState::Ants(s) => s.lattice(),
                    ModelState::Fire(_) => unreachable!(),
                };
                for (i, (&now, &shown)) in levels.iter().zip(&self.shown_pheromone).enumerate() {
                    let p = lattice.pos(i);
                    let f = food.remove(&(p.y, p.x));
                    if now != shown || f.is_some() {
                        changed_cells.push(CellChange {
                            x: p.x,
                            y: p.y,
                            fire: None,
                            food: f,
                            pheromone: Some(now),
                        });
                    }
                }
                self.shown_pheromone = levels;
                for e in events {
                    self.log(e);
                }
            }
        }
        let tick = self.model_tick();
        let metrics = self.current_metrics();
        for name in self.metric_names() {
            self.metrics.push(MetricRow {
                tick,
                metric: name,
                value: metrics[name],
            });
        }
        let finished = self.is_finished();
        if finished {
            self.log(EventKind::Finished);
        }
        TickReport {
            clock: self.clock,
            tick,
            advanced: true,
            finished,
            metrics,
            changed_cells,
            agent_positions: self.agent_views(),
        }
    }

    /// Applies a menu choice and restarts the run from tick 0 with the same
    /// seed. The clock keeps counting.
    pub fn apply_choice(&mut self, menu_id: &str, option_id: &str) -> Result<(), EngineError> {
        let mut config = self.config.clone();
        catalog::apply_option(&mut config, menu_id, option_id)?;
        self.restart_with(config)?;
        self.log(EventKind::Restart {
            menu: menu_id.to_string(),
            option: option_id.to_string(),
        });
        Ok(())
    }

    fn restart_with(&mut self, config: ScenarioConfig) -> Result<(), EngineError> {
        let mut rng = RngState::new(config.seed);
        self.state = init_state(&config, &mut rng)?;
        self.rng = rng;
        self.config = config;
        self.metrics.clear();
        self.shown_pheromone = self.pheromone_levels();
        Ok(())
    }

    /// Hands an agent back to its autonomous rule (clears a held stop).
    pub fn release(&mut self, agent: u32) -> Result<(), EngineError> {
        match &mut self.state {
            ModelState::Ants(s) => {
                let a = s
                    .ants_mut()
                    .iter_mut()
                    .find(|a| a.id == agent)
                    .ok_or(EngineError::UnknownAgent(agent))?;
                a.halted = false;
            }
            ModelState::Fire(_) => return Err(EngineError::UnknownAgent(agent)),
        }
        self.log(EventKind::Release { agent });
        Ok(())
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match &self.state {
            ModelState::Fire(s) => s.write_canonical(&mut out),
            ModelState::Ants(s) => s.write_canonical(&mut out),
        }
        out.extend_from_slice(&self.rng.seed().to_le_bytes());
        out.extend_from_slice(&self.rng.position().to_le_bytes());
        out
    }

    pub fn state_hash(&self) -> StateHash {
        let digest = Sha256::digest(self.canonical_bytes());
        StateHash(u64::from_be_bytes(digest[..8].try_into().unwrap()))
    }

    /// One row per metric per executed tick since the last restart.
    pub fn export_metrics(&self) -> &[MetricRow] {
        &self.metrics
    }

    pub fn snapshot(&self) -> Snapshot {
        let (cells, food) = match &self.state {
            ModelState::Fire(s) => (
                s.grid().patches().iter().map(|p| p.state.code()).collect(),
                Vec::new(),
            ),
            ModelState::Ants(s) => {
                let l = s.lattice();
                let food = l
                    .positions()
                    .filter(|p| s.food_at(*p) > 0)
                    .map(|p| CellChange {
                        x: p.x,
                        y: p.y,
                        fire: None,
                        food: Some(s.food_at(p)),
                        pheromone: None,
                    })
                    .collect();
                (self.pheromone_levels(), food)
            }
        };
        Snapshot {
            model: self.config.kind(),
            width: self.config.width,
            height: self.config.height,
            clock: self.clock,
            tick: self.model_tick(),
            finished: self.is_finished(),
            cells,
            food,
            agents: self.agent_views(),
            metrics: self
                .current_metrics()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            hash: self.state_hash(),
        }
    }

    /// Ticks until the model finishes.
    pub fn run_to_end(&mut self) -> StateHash {
        while !self.is_finished() {
            self.tick();
        }
        self.state_hash()
    }

    pub fn fire_state(&self) -> Option<&FireState> {
        match &self.state {
            ModelState::Fire(s) => Some(s),
            ModelState::Ants(_) => None,
        }
    }

    pub fn ants_state(&self) -> Option<&AntsState> {
        match &self.state {
            ModelState::Ants(s) => Some(s),
            ModelState::Fire(_) => None,
        }
    }

    /// Variant in effect, for callers that step models directly.
    pub fn fire_setup(&self) -> Option<FireVariant> {
        matches!(self.state, ModelState::Fire(_)).then(|| self.fire_variant())
    }
}

/// Writes metric rows as CSV with header `tick,metric,value`.
pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tick", "metric", "value"])?;
    for r in rows {
        w.write_record([r.tick.to_string(), r.metric.to_string(), r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
