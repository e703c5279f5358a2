//! The choice menus offered to a class, each option a declarative patch on
//! the scenario document.

use serde::Serialize;
use serde_json::{json, Value};

use super::scenario::{ModelKind, ScenarioConfig, ScenarioError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceOption {
    pub id: &'static str,
    pub label: &'static str,
    /// Dotted scenario paths and the values they receive.
    pub effect: Vec<(&'static str, Value)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceMenu {
    pub id: &'static str,
    pub model: ModelKind,
    pub title: &'static str,
    pub options: Vec<ChoiceOption>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChoiceError {
    #[error("unknown menu `{0}`")]
    UnknownMenu(String),
    #[error("menu `{menu}` has no option `{option}`")]
    UnknownOption { menu: String, option: String },
    #[error("menu `{menu}` does not apply to {model:?} scenarios")]
    WrongModel { menu: String, model: ModelKind },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

fn opt(id: &'static str, label: &'static str, effect: Vec<(&'static str, Value)>) -> ChoiceOption {
    ChoiceOption { id, label, effect }
}

fn wind_toward(id: &'static str, label: &'static str, degrees: f64) -> ChoiceOption {
    opt(
        id,
        label,
        vec![
            ("variant.wind.enabled", json!(true)),
            ("variant.wind.direction", json!(degrees)),
        ],
    )
}

/// Every shipped menu.
pub fn catalog() -> Vec<ChoiceMenu> {
    vec![
        ChoiceMenu {
            id: "QF3",
            model: ModelKind::Fire,
            title: "How does a single flame move?",
            options: vec![
                opt(
                    "a",
                    "Step one patch forward whatever is there",
                    vec![("variant.spread", json!("studentA_forward1"))],
                ),
                opt(
                    "b",
                    "Spread to the green patches among the three ahead",
                    vec![("variant.spread", json!("studentB_forward3"))],
                ),
                opt(
                    "c",
                    "Spread to the green patches among the three ahead and the two beside",
                    vec![("variant.spread", json!("studentC_forward5"))],
                ),
            ],
        },
        ChoiceMenu {
            id: "QF4",
            model: ModelKind::Fire,
            title: "What would make the fire model more realistic?",
            options: vec![
                opt(
                    "center_spark",
                    "Start the fire in the middle of the forest",
                    vec![("variant.ignition", json!("centerPoint"))],
                ),
                opt(
                    "wind_on",
                    "Turn the wind on",
                    vec![("variant.wind.enabled", json!(true))],
                ),
                opt(
                    "wind_off",
                    "Turn the wind off",
                    vec![("variant.wind.enabled", json!(false))],
                ),
                wind_toward("wind_east", "Wind blowing east", 0.0),
                wind_toward("wind_north", "Wind blowing north", 90.0),
                wind_toward("wind_west", "Wind blowing west", 180.0),
                wind_toward("wind_south", "Wind blowing south", 270.0),
                opt(
                    "humidity_low",
                    "Low humidity",
                    vec![("variant.humidity", json!("low"))],
                ),
                opt(
                    "humidity_medium",
                    "Medium humidity",
                    vec![("variant.humidity", json!("medium"))],
                ),
                opt(
                    "humidity_high",
                    "High humidity",
                    vec![("variant.humidity", json!("high"))],
                ),
            ],
        },
        ChoiceMenu {
            id: "QA2",
            model: ModelKind::Ants,
            title: "How do ants search for food?",
            options: vec![
                opt(
                    "a",
                    "Walk straight out, turning to pheromone next to them",
                    vec![("variant.motion", json!("radialPheromoneInterrupt"))],
                ),
                opt(
                    "b",
                    "Wander until meeting an ant with food, then head the way it came from",
                    vec![("variant.motion", json!("randomUntilCarrierMet"))],
                ),
            ],
        },
        ChoiceMenu {
            id: "QA3",
            model: ModelKind::Ants,
            title: "How does an ant with food find the nest?",
            options: vec![
                opt(
                    "nestScent",
                    "Follow the scent the nest gives off",
                    vec![("variant.homing", json!("nestScentGradient"))],
                ),
                opt(
                    "turn180",
                    "Turn around and walk straight back",
                    vec![("variant.homing", json!("turn180"))],
                ),
            ],
        },
        ChoiceMenu {
            id: "QA5",
            model: ModelKind::Ants,
            title: "How could the colony forage better?",
            options: vec![
                opt(
                    "a",
                    "Leave the nest only after the first ant has brought food back",
                    vec![("variant.exit_policy", json!("gatedOnFirstReturn"))],
                ),
                opt(
                    "b",
                    "Leave the nest opposite to the way you came in",
                    vec![("variant.exit_policy", json!("reverseReentry"))],
                ),
                opt(
                    "c",
                    "Turn to the neighboring patch with the most pheromone",
                    vec![("variant.following", json!("accumulateMax"))],
                ),
            ],
        },
    ]
}

pub fn menus_for(model: ModelKind) -> Vec<ChoiceMenu> {
    catalog().into_iter().filter(|m| m.model == model).collect()
}

pub fn find_option(menu_id: &str, option_id: &str) -> Result<(ChoiceMenu, ChoiceOption), ChoiceError> {
    let menu = catalog()
        .into_iter()
        .find(|m| m.id == menu_id)
        .ok_or_else(|| ChoiceError::UnknownMenu(menu_id.to_string()))?;
    let option = menu
        .options
        .iter()
        .find(|o| o.id == option_id)
        .cloned()
        .ok_or_else(|| ChoiceError::UnknownOption {
            menu: menu_id.to_string(),
            option: option_id.to_string(),
        })?;
    Ok((menu, option))
}

/// The patch that undoes an applied option.
pub type Revert = Vec<(&'static str, Value)>;

/// Applies an option's patch, returning the previous values so it can be
/// reverted with [`revert`]. The config is unchanged on error.
pub fn apply_option(
    config: &mut ScenarioConfig,
    menu_id: &str,
    option_id: &str,
) -> Result<Revert, ChoiceError> {
    let (menu, option) = find_option(menu_id, option_id)?;
    if menu.model != config.kind() {
        return Err(ChoiceError::WrongModel {
            menu: menu_id.to_string(),
            model: config.kind(),
        });
    }
    let mut next = config.clone();
    let mut undo = Vec::new();
    for (path, value) in option.effect {
        let prev = next.set_path(path, value)?;
        undo.push((path, prev));
    }
    *config = next;
    undo.reverse();
    Ok(undo)
}

pub fn revert(config: &mut ScenarioConfig, undo: Revert) -> Result<(), ChoiceError> {
    for (path, value) in undo {
        config.set_path(path, value)?;
    }
    Ok(())
}
