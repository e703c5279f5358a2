//! Scenario documents.
//!
//! A scenario is one JSON object:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "fig2a",
//!   "model": "fire",
//!   "width": 251, "height": 251,
//!   "seed": 42,
//!   "max_ticks": 5020,
//!   "tick_rate_hz": 10,
//!   "variant": { "spread": "baseline4", "ignition": "leftMiddlePoint", "heading": 0,
//!                "wind": { "enabled": false, "direction": 0, "strength": 0.8 },
//!                "humidity": "low" },
//!   "params": { "density": 1.0 }
//! }
//! ```
//!
//! Ants scenarios carry `variant` (motion, homing, following, exit_policy),
//! `params` (wiggle, drop_amount, evaporation_rate, diffusion_share,
//! visibility_threshold, nest_radius) and `layout` (n_ants, nest, food).
//! `max_ticks`, `tick_rate_hz`, `name`, `variant`, `params` fields other than
//! `density`, and `layout` fields other than `food` have defaults. Unknown
//! keys are rejected everywhere.
//!
//! Overrides address the fully defaulted document with dotted paths such as
//! `variant.wind.direction` or `layout.food.0.amount`.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ants::{init_ants, AntsParams, AntsVariant, FoodPile};
use crate::fire::{default_max_ticks, init_fire, FireVariant, Humidity, Ignition, Spread, Wind};
use crate::world::{GridPos, Heading4, RngState};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unknown parameter path `{0}`")]
    UnknownPath(String),
    #[error("unknown shipped scenario `{0}`")]
    UnknownShipped(String),
}

impl ScenarioError {
    fn field(field: impl Into<String>, message: impl ToString) -> Self {
        ScenarioError::Field {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fire,
    Ants,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindSetting {
    pub enabled: bool,
    /// Degrees the wind blows toward.
    pub direction: f64,
    pub strength: f64,
}

impl Default for WindSetting {
    fn default() -> Self {
        Self {
            enabled: false,
            direction: 0.0,
            strength: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FireVariantConfig {
    pub spread: Spread,
    pub ignition: Ignition,
    /// Initial flame heading in degrees; must be axis-aligned.
    pub heading: f64,
    pub wind: WindSetting,
    pub humidity: Humidity,
}

impl Default for FireVariantConfig {
    fn default() -> Self {
        Self {
            spread: Spread::Baseline4,
            ignition: Ignition::LeftEdgeColumn,
            heading: 0.0,
            wind: WindSetting::default(),
            humidity: Humidity::Low,
        }
    }
}

impl FireVariantConfig {
    pub fn to_variant(&self) -> Result<FireVariant, ScenarioError> {
        let heading = Heading4::from_degrees(self.heading)
            .map_err(|e| ScenarioError::field("variant.heading", e))?;
        Ok(FireVariant {
            spread: self.spread,
            ignition: self.ignition,
            heading,
            wind: self.wind.enabled.then_some(Wind {
                direction: self.wind.direction,
                strength: self.wind.strength,
            }),
            humidity: self.humidity,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FireParams {
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntsLayout {
    #[serde(default = "default_n_ants")]
    pub n_ants: u32,
    /// Defaults to the grid center.
    #[serde(default)]
    pub nest: Option<GridPos>,
    pub food: Vec<FoodPile>,
}

fn default_n_ants() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    Fire {
        variant: FireVariantConfig,
        params: FireParams,
    },
    Ants {
        variant: AntsVariant,
        params: AntsParams,
        layout: AntsLayout,
    },
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub max_ticks: u64,
    pub tick_rate_hz: u32,
    pub model: ModelConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    model: ModelKind,
    width: usize,
    height: usize,
    seed: u64,
    #[serde(default)]
    max_ticks: Option<u64>,
    #[serde(default)]
    tick_rate_hz: Option<u32>,
    #[serde(default)]
    variant: Option<Value>,
    #[serde(default)]
    params: Option<Value>,
    #[serde(default)]
    layout: Option<Value>,
}

fn section<T: serde::de::DeserializeOwned + Default>(
    name: &str,
    value: Option<Value>,
) -> Result<T, ScenarioError> {
    match value {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v).map_err(|e| ScenarioError::field(name, e)),
    }
}

fn required<T: serde::de::DeserializeOwned>(name: &str, value: Option<Value>) -> Result<T, ScenarioError> {
    let v = value.ok_or_else(|| ScenarioError::field(name, "section is required"))?;
    serde_json::from_value(v).map_err(|e| ScenarioError::field(name, e))
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    ScenarioConfig::from_value(value)
}

impl ScenarioConfig {
    pub fn from_value(value: Value) -> Result<Self, ScenarioError> {
        let raw: RawScenario =
            serde_json::from_value(value).map_err(|e| ScenarioError::field("scenario", e))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::field(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", raw.schema_version),
            ));
        }
        let model = match raw.model {
            ModelKind::Fire => {
                if raw.layout.is_some() {
                    return Err(ScenarioError::field("layout", "fire scenarios have no layout"));
                }
                ModelConfig::Fire {
                    variant: section("variant", raw.variant)?,
                    params: required("params", raw.params)?,
                }
            }
            ModelKind::Ants => ModelConfig::Ants {
                variant: section("variant", raw.variant)?,
                params: section("params", raw.params)?,
                layout: required("layout", raw.layout)?,
            },
        };
        let config = ScenarioConfig {
            name: raw.name,
            width: raw.width,
            height: raw.height,
            seed: raw.seed,
            max_ticks: raw
                .max_ticks
                .unwrap_or_else(|| default_max_ticks(raw.width, raw.height)),
            tick_rate_hz: raw.tick_rate_hz.unwrap_or(10),
            model,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn kind(&self) -> ModelKind {
        match self.model {
            ModelConfig::Fire { .. } => ModelKind::Fire,
            ModelConfig::Ants { .. } => ModelKind::Ants,
        }
    }

    pub fn nest(&self) -> Option<GridPos> {
        match &self.model {
            ModelConfig::Ants { layout, .. } => Some(
                layout
                    .nest
                    .unwrap_or(GridPos::new((self.width / 2) as i32, (self.height / 2) as i32)),
            ),
            ModelConfig::Fire { .. } => None,
        }
    }

    /// Semantic checks; constructs the initial model once so every rule the
    /// models enforce is checked here too.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.max_ticks == 0 {
            return Err(ScenarioError::field("max_ticks", "must be at least 1"));
        }
        if !(1..=60).contains(&self.tick_rate_hz) {
            return Err(ScenarioError::field("tick_rate_hz", "must lie in 1..=60"));
        }
        let mut rng = RngState::new(self.seed);
        match &self.model {
            ModelConfig::Fire { variant, params } => {
                if !(0.0..=1.0).contains(&params.density) {
                    return Err(ScenarioError::field(
                        "params.density",
                        format!("must lie in [0, 1], got {}", params.density),
                    ));
                }
                let w = variant.wind;
                if !(0.0..=1.0).contains(&w.strength) {
                    return Err(ScenarioError::field("variant.wind.strength", "must lie in [0, 1]"));
                }
                if !w.direction.is_finite() {
                    return Err(ScenarioError::field("variant.wind.direction", "must be finite"));
                }
                let v = variant.to_variant()?;
                init_fire(self.width, self.height, params.density, &v, &mut rng)
                    .map_err(|e| ScenarioError::field("scenario", e))?;
            }
            ModelConfig::Ants {
                variant,
                params,
                layout,
            } => {
                params
                    .validate()
                    .map_err(|e| ScenarioError::field("params", e))?;
                init_ants(
                    self.width,
                    self.height,
                    layout.n_ants,
                    &layout.food,
                    self.nest().unwrap(),
                    variant,
                    params,
                    &mut rng,
                )
                .map_err(|e| ScenarioError::field("layout", e))?;
            }
        }
        Ok(())
    }

    /// The fully defaulted document.
    pub fn to_value(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("schema_version".into(), SCHEMA_VERSION.into());
        if let Some(name) = &self.name {
            doc.insert("name".into(), name.clone().into());
        }
        doc.insert(
            "model".into(),
            serde_json::to_value(self.kind()).expect("serializable"),
        );
        doc.insert("width".into(), self.width.into());
        doc.insert("height".into(), self.height.into());
        doc.insert("seed".into(), self.seed.into());
        doc.insert("max_ticks".into(), self.max_ticks.into());
        doc.insert("tick_rate_hz".into(), self.tick_rate_hz.into());
        match &self.model {
            ModelConfig::Fire { variant, params } => {
                doc.insert("variant".into(), to(variant));
                doc.insert("params".into(), to(params));
            }
            ModelConfig::Ants {
                variant,
                params,
                layout,
            } => {
                doc.insert("variant".into(), to(variant));
                doc.insert("params".into(), to(params));
                let mut layout = layout.clone();
                layout.nest = self.nest();
                doc.insert("layout".into(), to(&layout));
            }
        }
        Value::Object(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable")
    }

    /// Reads the value at a dotted path of the defaulted document.
    pub fn get_path(&self, path: &str) -> Result<Value, ScenarioError> {
        let doc = self.to_value();
        lookup(&doc, path)
            .cloned()
            .ok_or_else(|| ScenarioError::UnknownPath(path.to_string()))
    }

    /// Replaces the value at `path` and re-validates. Returns the previous
    /// value so the change can be reverted.
    pub fn set_path(&mut self, path: &str, value: Value) -> Result<Value, ScenarioError> {
        let mut doc = self.to_value();
        let slot = lookup_mut(&mut doc, path).ok_or_else(|| ScenarioError::UnknownPath(path.to_string()))?;
        let previous = std::mem::replace(slot, value);
        *self = ScenarioConfig::from_value(doc)?;
        Ok(previous)
    }

    /// Applies a `key=value` override. The value is read as JSON when it
    /// parses, otherwise as a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ScenarioError> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ScenarioError::field(assignment, "override must look like key=value"))?;
        let value = parse_override_value(raw.trim());
        self.set_path(path.trim(), value)?;
        Ok(())
    }

    /// Applies several overrides, validating only the final document. The
    /// config is unchanged on error.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, assignments: &[S]) -> Result<(), ScenarioError> {
        let mut doc = self.to_value();
        for a in assignments {
            let a = a.as_ref();
            let (path, raw) = a
                .split_once('=')
                .ok_or_else(|| ScenarioError::field(a, "override must look like key=value"))?;
            let path = path.trim();
            let slot = lookup_mut(&mut doc, path).ok_or_else(|| ScenarioError::UnknownPath(path.to_string()))?;
            *slot = parse_override_value(raw.trim());
        }
        *self = ScenarioConfig::from_value(doc)?;
        Ok(())
    }
}

pub fn parse_override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn lookup<'a>(doc: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(doc, |v, key| match v {
        Value::Object(m) => m.get(key),
        Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get(i)),
        _ => None,
    })
}

fn lookup_mut<'a>(doc: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    path.split('.').try_fold(doc, |v, key| match v {
        Value::Object(m) => m.get_mut(key),
        Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
        _ => None,
    })
}

fn to<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Scenarios bundled with the crate, by name.
pub const SHIPPED: &[(&str, &str)] = &[
    ("fig1a", include_str!("../../scenarios/fig1a.json")),
    ("fig2a", include_str!("../../scenarios/fig2a.json")),
    ("fig2b", include_str!("../../scenarios/fig2b.json")),
    ("fig3", include_str!("../../scenarios/fig3.json")),
    ("fig4_one_ant", include_str!("../../scenarios/fig4_one_ant.json")),
    ("fig4_few_ants", include_str!("../../scenarios/fig4_few_ants.json")),
];

pub fn shipped(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let text = SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ScenarioError::UnknownShipped(name.to_string()))?;
    load_scenario(text)
}
