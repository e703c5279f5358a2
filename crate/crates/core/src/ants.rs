//! The Ants micro-world.
//!
//! One tick runs five phases in a fixed order, and that order is part of the
//! replay contract:
//!
//! 1. **Exit**: the exit policy lets ants in the nest out and picks their
//!    heading.
//! 2. **Search**: every out ant that is not carrying food moves by its motion
//!    rule (or by a steering command).
//! 3. **Homing**: every carrying ant moves by the homing rule and drops
//!    pheromone on the patch it leaves.
//! 4. **Pickup / delivery**: ants on food pick up one unit; carrying ants
//!    inside the nest radius deliver it.
//! 5. **Field update**: pheromone evaporates, then diffuses.
//!
//! Motion is on the lattice: a continuous heading is quantized to the Moore
//! neighbor with the smallest angular difference (ties clockwise from north).
//! An ant whose quantized step would leave the grid turns around first.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::world::{
    angle_between, normalize_heading, Dir8, GridPos, Lattice, RngState, ScalarField, Topology,
    WorldError, WorldGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Motion {
    RandomWalk,
    RadialPheromoneInterrupt,
    RandomUntilCarrierMet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Homing {
    NestScentGradient,
    #[serde(rename = "turn180")]
    Turn180,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Following {
    ThresholdTurn,
    AccumulateMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExitPolicy {
    Immediate,
    GatedOnFirstReturn,
    ReverseReentry,
}

impl Motion {
    pub const ALL: [Motion; 3] = [
        Motion::RandomWalk,
        Motion::RadialPheromoneInterrupt,
        Motion::RandomUntilCarrierMet,
    ];
}

impl Homing {
    pub const ALL: [Homing; 2] = [Homing::NestScentGradient, Homing::Turn180];
}

impl Following {
    pub const ALL: [Following; 2] = [Following::ThresholdTurn, Following::AccumulateMax];
}

impl ExitPolicy {
    pub const ALL: [ExitPolicy; 3] = [
        ExitPolicy::Immediate,
        ExitPolicy::GatedOnFirstReturn,
        ExitPolicy::ReverseReentry,
    ];
}

/// The four independently selectable behavior axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntsVariant {
    pub motion: Motion,
    pub homing: Homing,
    pub following: Following,
    pub exit_policy: ExitPolicy,
}

impl Default for AntsVariant {
    fn default() -> Self {
        Self {
            motion: Motion::RandomWalk,
            homing: Homing::NestScentGradient,
            following: Following::ThresholdTurn,
            exit_policy: ExitPolicy::Immediate,
        }
    }
}

impl AntsVariant {
    /// Every combination of the four axes.
    pub fn all() -> impl Iterator<Item = AntsVariant> {
        Motion::ALL.into_iter().flat_map(|motion| {
            Homing::ALL.into_iter().flat_map(move |homing| {
                Following::ALL.into_iter().flat_map(move |following| {
                    ExitPolicy::ALL.into_iter().map(move |exit_policy| AntsVariant {
                        motion,
                        homing,
                        following,
                        exit_policy,
                    })
                })
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntsParams {
    /// Largest random turn per tick, degrees.
    pub wiggle: f64,
    /// Pheromone left on each patch a carrying ant leaves.
    pub drop_amount: f64,
    pub evaporation_rate: f64,
    pub diffusion_share: f64,
    /// Level at which a patch counts as a visible trail.
    pub visibility_threshold: f64,
    /// Chebyshev radius of the nest.
    pub nest_radius: u32,
}

impl Default for AntsParams {
    fn default() -> Self {
        Self {
            wiggle: 40.0,
            drop_amount: 60.0,
            evaporation_rate: 0.1,
            diffusion_share: 0.5,
            visibility_threshold: 0.05,
            nest_radius: 2,
        }
    }
}

impl AntsParams {
    pub fn validate(&self) -> Result<(), AntsError> {
        let non_negative = [
            ("wiggle", self.wiggle),
            ("drop_amount", self.drop_amount),
            ("visibility_threshold", self.visibility_threshold),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(AntsError::InvalidParam { name, value: v });
            }
        }
        for (name, v) in [
            ("evaporation_rate", self.evaporation_rate),
            ("diffusion_share", self.diffusion_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AntsError::InvalidParam { name, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoodPile {
    pub x: i32,
    pub y: i32,
    pub amount: u32,
}

impl FoodPile {
    pub fn pos(&self) -> GridPos {
        GridPos::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AntsError {
    #[error("at least one ant is required")]
    NoAnts,
    #[error("food pile at {0} must hold at least one unit")]
    EmptyPile(GridPos),
    #[error("food pile at {pos} lies inside the nest (radius {radius} around {nest})")]
    PileInsideNest {
        pos: GridPos,
        nest: GridPos,
        radius: u32,
    },
    #[error("parameter {name} is invalid: {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntAgent {
    pub id: u32,
    pub pos: GridPos,
    /// Degrees in [0, 360).
    pub heading: f64,
    pub carrying: bool,
    pub in_nest: bool,
    /// Heading taken at the most recent exit from the nest.
    pub exit_heading: f64,
    /// Heading at the most recent delivery.
    pub entry_heading: Option<f64>,
    /// Gated exit: the scout may leave before anyone has returned.
    pub scout: bool,
    /// Set once a searching ant has met a carrier and now holds its heading.
    pub locked: bool,
    /// Held in place by a participant's stop command.
    pub halted: bool,
}

impl AntAgent {
    pub fn is_out(&self) -> bool {
        !self.in_nest
    }
}

/// A participant's steering input for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SteerAction {
    SetHeading { degrees: f64 },
    TurnLeft,
    TurnRight,
    Stop,
    Go,
}

/// Degrees added by one turn command.
pub const STEER_TURN: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AntEvent {
    Exit { ant: u32, heading: f64 },
    Pickup { ant: u32, pos: GridPos },
    Delivery { ant: u32, entry_heading: f64 },
    CarrierMet { ant: u32, carrier: u32 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AntsStep {
    pub events: Vec<AntEvent>,
    /// Patches whose food count changed, with the new count.
    pub food_changed: Vec<(GridPos, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoodCensus {
    pub in_piles: u64,
    pub carried: u64,
    pub delivered: u64,
}

impl FoodCensus {
    pub fn total(&self) -> u64 {
        self.in_piles + self.carried + self.delivered
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntsRunResult {
    pub delivered: u64,
    pub ticks: u64,
    pub trail: ScalarField,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AntsPatch {
    pub food: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntsState {
    grid: WorldGrid<AntsPatch>,
    nest_pos: GridPos,
    nest_radius: u32,
    pub pheromone: ScalarField,
    nest_scent: ScalarField,
    ants: Vec<AntAgent>,
    delivered: u64,
    initial_food: u64,
    tick: u64,
    first_return_seen: bool,
    first_return_heading: f64,
}

/// Static homing field: `1 / (1 + chebyshev(pos, nest))`.
pub fn nest_scent(pos: GridPos, nest: GridPos) -> f64 {
    1.0 / (1.0 + pos.chebyshev(nest) as f64)
}

/// Sets up the nest, the food piles and `n_ants` ants waiting in the nest.
#[allow(clippy::too_many_arguments)]
pub fn init_ants(
    width: usize,
    height: usize,
    n_ants: u32,
    food_layout: &[FoodPile],
    nest_pos: GridPos,
    variant: &AntsVariant,
    params: &AntsParams,
    rng: &mut RngState,
) -> Result<AntsState, AntsError> {
    if n_ants == 0 {
        return Err(AntsError::NoAnts);
    }
    params.validate()?;
    let mut grid: WorldGrid<AntsPatch> = WorldGrid::new(width, height, false)?;
    let lattice = grid.lattice();
    lattice.check(nest_pos)?;
    let mut initial_food = 0u64;
    for pile in food_layout {
        let pos = pile.pos();
        lattice.check(pos)?;
        if pile.amount == 0 {
            return Err(AntsError::EmptyPile(pos));
        }
        if pos.chebyshev(nest_pos) <= params.nest_radius {
            return Err(AntsError::PileInsideNest {
                pos,
                nest: nest_pos,
                radius: params.nest_radius,
            });
        }
        grid[pos].food += pile.amount;
        initial_food += pile.amount as u64;
    }
    let ants = (0..n_ants)
        .map(|id| {
            let heading = rng.range_f64(0.0, 360.0);
            AntAgent {
                id,
                pos: nest_pos,
                heading,
                carrying: false,
                in_nest: true,
                exit_heading: heading,
                entry_heading: None,
                scout: variant.exit_policy == ExitPolicy::GatedOnFirstReturn && id == 0,
                locked: false,
                halted: false,
            }
        })
        .collect();
    Ok(AntsState {
        nest_scent: ScalarField::from_fn(lattice, |p| nest_scent(p, nest_pos)),
        pheromone: ScalarField::zeros(lattice),
        grid,
        nest_pos,
        nest_radius: params.nest_radius,
        ants,
        delivered: 0,
        initial_food,
        tick: 0,
        first_return_seen: false,
        first_return_heading: 0.0,
    })
}

/// Picks the neighbor a searching ant turns toward, if any.
///
/// `candidates` are the in-bounds Moore neighbors as (direction, pheromone),
/// in the documented neighbor order (N, E, S, W, NE, SE, SW, NW). Nothing is
/// selected unless some neighbor reaches `threshold`.
///
/// - `ThresholdTurn`: the qualifying neighbor closest to the current heading.
/// - `AccumulateMax`: the neighbor holding the most pheromone.
///
/// Ties go to the earliest candidate.
pub fn following_target(
    following: Following,
    heading: f64,
    candidates: &[(Dir8, f64)],
    threshold: f64,
) -> Option<Dir8> {
    let qualifying = candidates.iter().filter(|(_, v)| *v >= threshold);
    let mut best: Option<(Dir8, f64)> = None;
    for &(dir, level) in qualifying {
        let better = match (following, best) {
            (_, None) => true,
            (Following::ThresholdTurn, Some((b, _))) => {
                angle_between(heading, dir.degrees()) < angle_between(heading, b.degrees())
            }
            (Following::AccumulateMax, Some((_, bl))) => level > bl,
        };
        if better {
            best = Some((dir, level));
        }
    }
    best.map(|(d, _)| d)
}

/// Step from `pos` along `heading`, turning around at the grid edge.
/// Returns the new position and the heading actually used.
fn advance(lattice: Lattice, pos: GridPos, heading: f64) -> (GridPos, f64) {
    let dir = Dir8::nearest(heading);
    if let Some(q) = lattice.step(pos, dir) {
        return (q, heading);
    }
    let reversed = normalize_heading(heading + 180.0);
    if let Some(q) = lattice.step(pos, Dir8::nearest(reversed)) {
        return (q, reversed);
    }
    let open = Dir8::CLOCKWISE
        .into_iter()
        .filter(|d| lattice.step(pos, *d).is_some());
    let d = Dir8::nearest_among(reversed, open).expect("a 3x3 grid always has an open neighbor");
    (lattice.step(pos, d).unwrap(), d.degrees())
}

impl AntsState {
    pub fn lattice(&self) -> Lattice {
        self.grid.lattice()
    }

    pub fn nest_pos(&self) -> GridPos {
        self.nest_pos
    }

    pub fn nest_radius(&self) -> u32 {
        self.nest_radius
    }

    pub fn ants(&self) -> &[AntAgent] {
        &self.ants
    }

    pub fn ants_mut(&mut self) -> &mut [AntAgent] {
        &mut self.ants
    }

    pub fn food_at(&self, pos: GridPos) -> u32 {
        self.grid[pos].food
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn initial_food(&self) -> u64 {
        self.initial_food
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn first_return(&self) -> Option<f64> {
        self.first_return_seen.then_some(self.first_return_heading)
    }

    pub fn out_ants(&self) -> usize {
        self.ants.iter().filter(|a| a.is_out()).count()
    }

    pub fn nest_scent(&self) -> &ScalarField {
        &self.nest_scent
    }

    pub fn nest_scent_at(&self, pos: GridPos) -> f64 {
        self.nest_scent.get(pos)
    }

    pub fn in_nest_area(&self, pos: GridPos) -> bool {
        pos.chebyshev(self.nest_pos) <= self.nest_radius
    }

    pub fn is_finished(&self) -> bool {
        self.delivered == self.initial_food
    }

    pub fn food_census(&self) -> FoodCensus {
        FoodCensus {
            in_piles: self.grid.patches().iter().map(|p| p.food as u64).sum(),
            carried: self.ants.iter().filter(|a| a.carrying).count() as u64,
            delivered: self.delivered,
        }
    }

    /// Canonical bytes: patches row-major (food, pheromone bits), then ants by
    /// id, then counters.
    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(b"ants");
        out.extend_from_slice(&(self.grid.width() as u32).to_le_bytes());
        out.extend_from_slice(&(self.grid.height() as u32).to_le_bytes());
        for (patch, ph) in self.grid.patches().iter().zip(self.pheromone.values()) {
            out.extend_from_slice(&patch.food.to_le_bytes());
            out.extend_from_slice(&ph.to_bits().to_le_bytes());
        }
        out.extend_from_slice(&(self.ants.len() as u32).to_le_bytes());
        for a in &self.ants {
            out.extend_from_slice(&a.id.to_le_bytes());
            out.extend_from_slice(&a.pos.x.to_le_bytes());
            out.extend_from_slice(&a.pos.y.to_le_bytes());
            out.extend_from_slice(&a.heading.to_bits().to_le_bytes());
            out.extend_from_slice(&a.exit_heading.to_bits().to_le_bytes());
            out.extend_from_slice(&a.entry_heading.map_or(u64::MAX, f64::to_bits).to_le_bytes());
            let flags = a.carrying as u8
                | (a.in_nest as u8) << 1
                | (a.scout as u8) << 2
                | (a.locked as u8) << 3
                | (a.halted as u8) << 4;
            out.push(flags);
        }
        out.extend_from_slice(&self.delivered.to_le_bytes());
        out.extend_from_slice(&self.tick.to_le_bytes());
        out.push(self.first_return_seen as u8);
        out.extend_from_slice(&self.first_return_heading.to_bits().to_le_bytes());
    }

    fn pheromone_neighbors(&self, pos: GridPos) -> arrayvec::ArrayVec<(Dir8, f64), 8> {
        let lattice = self.lattice();
        Topology::Moore8
            .directions()
            .into_iter()
            .filter_map(|d| lattice.step(pos, d).map(|q| (d, self.pheromone.get(q))))
            .collect()
    }

    fn exit_phase(&mut self, variant: &AntsVariant, rng: &mut RngState, events: &mut Vec<AntEvent>) {
        for i in 0..self.ants.len() {
            let ant = self.ants[i];
            if !ant.in_nest {
                continue;
            }
            let heading = match variant.exit_policy {
                ExitPolicy::Immediate => match ant.entry_heading {
                    None => ant.exit_heading,
                    Some(_) => rng.range_f64(0.0, 360.0),
                },
                ExitPolicy::GatedOnFirstReturn => {
                    if self.first_return_seen {
                        self.first_return_heading
                    } else if ant.scout && ant.entry_heading.is_none() {
                        ant.exit_heading
                    } else {
                        continue;
                    }
                }
                ExitPolicy::ReverseReentry => match ant.entry_heading {
                    None => ant.exit_heading,
                    Some(entry) => normalize_heading(entry + 180.0),
                },
            };
            let a = &mut self.ants[i];
            a.in_nest = false;
            a.heading = heading;
            a.exit_heading = heading;
            a.locked = false;
            events.push(AntEvent::Exit { ant: a.id, heading });
        }
    }

    fn search_phase(
        &mut self,
        variant: &AntsVariant,
        params: &AntsParams,
        rng: &mut RngState,
        steering: &BTreeMap<u32, SteerAction>,
        events: &mut Vec<AntEvent>,
    ) {
        let lattice = self.lattice();
        let carriers: Vec<(u32, GridPos, f64)> = self
            .ants
            .iter()
            .filter(|a| a.is_out() && a.carrying)
            .map(|a| (a.id, a.pos, a.heading))
            .collect();
        for i in 0..self.ants.len() {
            let ant = self.ants[i];
            if ant.in_nest || ant.carrying {
                continue;
            }
            let heading = match steering.get(&ant.id) {
                Some(action) => match steered_heading(&mut self.ants[i], *action) {
                    Some(h) => h,
                    None => continue,
                },
                None if ant.halted => continue,
                None => match variant.motion {
                    Motion::RandomWalk => {
                        let turned = ant.heading + rng.range_f64(-params.wiggle, params.wiggle);
                        let neigh = self.pheromone_neighbors(ant.pos);
                        match following_target(
                            variant.following,
                            turned,
                            &neigh,
                            params.visibility_threshold,
                        ) {
                            Some(d) => d.degrees(),
                            None => turned,
                        }
                    }
                    Motion::RadialPheromoneInterrupt => {
                        let neigh = self.pheromone_neighbors(ant.pos);
                        match following_target(
                            variant.following,
                            ant.heading,
                            &neigh,
                            params.visibility_threshold,
                        ) {
                            Some(d) => d.degrees(),
                            None => ant.heading,
                        }
                    }
                    Motion::RandomUntilCarrierMet => {
                        if ant.locked {
                            ant.heading
                        } else if let Some(&(cid, _, ch)) = carriers
                            .iter()
                            .find(|(cid, cp, _)| *cid != ant.id && cp.chebyshev(ant.pos) == 1)
                        {
                            self.ants[i].locked = true;
                            events.push(AntEvent::CarrierMet {
                                ant: ant.id,
                                carrier: cid,
                            });
                            ch + 180.0
                        } else {
                            ant.heading + rng.range_f64(-params.wiggle, params.wiggle)
                        }
                    }
                },
            };
            let (pos, used) = advance(lattice, ant.pos, normalize_heading(heading));
            let a = &mut self.ants[i];
            a.pos = pos;
            a.heading = used;
        }
    }

    fn homing_phase(
        &mut self,
        variant: &AntsVariant,
        params: &AntsParams,
        steering: &BTreeMap<u32, SteerAction>,
    ) {
        let lattice = self.lattice();
        for i in 0..self.ants.len() {
            let ant = self.ants[i];
            if ant.in_nest || !ant.carrying {
                continue;
            }
            let (pos, heading) = match steering.get(&ant.id) {
                Some(action) => match steered_heading(&mut self.ants[i], *action) {
                    Some(h) => advance(lattice, ant.pos, normalize_heading(h)),
                    None => continue,
                },
                None if ant.halted => continue,
                None => match variant.homing {
                    Homing::NestScentGradient => {
                        let mut best: Option<(Dir8, GridPos, f64)> = None;
                        for d in Topology::Moore8.directions() {
                            let Some(q) = lattice.step(ant.pos, d) else { continue };
                            let s = self.nest_scent.get(q);
                            if best.map_or(true, |(_, _, bs)| s > bs) {
                                best = Some((d, q, s));
                            }
                        }
                        let (d, q, _) = best.expect("every patch has a neighbor");
                        (q, d.degrees())
                    }
                    Homing::Turn180 => advance(lattice, ant.pos, ant.heading),
                },
            };
            self.pheromone.add(ant.pos, params.drop_amount);
            let a = &mut self.ants[i];
            a.pos = pos;
            a.heading = heading;
        }
    }

    fn exchange_phase(
        &mut self,
        variant: &AntsVariant,
        events: &mut Vec<AntEvent>,
        food_changed: &mut Vec<(GridPos, u32)>,
    ) {
        for i in 0..self.ants.len() {
            let ant = self.ants[i];
            if ant.in_nest {
                continue;
            }
            if ant.carrying {
                if self.in_nest_area(ant.pos) {
                    let a = &mut self.ants[i];
                    a.carrying = false;
                    a.in_nest = true;
                    a.entry_heading = Some(a.heading);
                    self.delivered += 1;
                    if !self.first_return_seen {
                        self.first_return_seen = true;
                        self.first_return_heading = normalize_heading(ant.heading + 180.0);
                    }
                    events.push(AntEvent::Delivery {
                        ant: ant.id,
                        entry_heading: ant.heading,
                    });
                }
            } else if self.grid[ant.pos].food > 0 {
                self.grid[ant.pos].food -= 1;
                food_changed.push((ant.pos, self.grid[ant.pos].food));
                let a = &mut self.ants[i];
                a.carrying = true;
                a.locked = false;
                if variant.homing == Homing::Turn180 {
                    a.heading = normalize_heading(a.heading + 180.0);
                }
                events.push(AntEvent::Pickup {
                    ant: ant.id,
                    pos: ant.pos,
                });
            }
        }
    }
}

/// Applies a steering action to `ant`, returning the heading to move along
/// this tick, or `None` when the ant stays put.
fn steered_heading(ant: &mut AntAgent, action: SteerAction) -> Option<f64> {
    match action {
        SteerAction::SetHeading { degrees } => {
            ant.halted = false;
            Some(degrees)
        }
        SteerAction::TurnLeft => {
            ant.halted = false;
            Some(ant.heading + STEER_TURN)
        }
        SteerAction::TurnRight => {
            ant.halted = false;
            Some(ant.heading - STEER_TURN)
        }
        SteerAction::Stop => {
            ant.halted = true;
            None
        }
        SteerAction::Go => {
            ant.halted = false;
            Some(ant.heading)
        }
    }
}

/// Advances one tick. `steering` maps ant ids to this tick's commands; a
/// steered ant moves along the commanded heading instead of its own rule.
pub fn step_ants(
    state: &mut AntsState,
    variant: &AntsVariant,
    params: &AntsParams,
    rng: &mut RngState,
    steering: &BTreeMap<u32, SteerAction>,
) -> Result<AntsStep, AntsError> {
    params.validate()?;
    for (id, action) in steering {
        if let SteerAction::SetHeading { degrees } = action {
            if !degrees.is_finite() {
                return Err(AntsError::InvalidParam {
                    name: "steer heading",
                    value: *degrees,
                });
            }
        }
        // stop / go latch even for ants still in the nest
        if let Some(a) = state.ants.iter_mut().find(|a| a.id == *id && a.in_nest) {
            match action {
                SteerAction::Stop => a.halted = true,
                SteerAction::Go => a.halted = false,
                _ => {}
            }
        }
    }
    let mut step = AntsStep::default();
    state.exit_phase(variant, rng, &mut step.events);
    state.search_phase(variant, params, rng, steering, &mut step.events);
    state.homing_phase(variant, params, steering);
    state.exchange_phase(variant, &mut step.events, &mut step.food_changed);
    state.pheromone.evaporate(params.evaporation_rate)?;
    state.pheromone.diffuse(params.diffusion_share)?;
    state.tick += 1;
    Ok(step)
}

/// Steps until every unit of food is delivered or `max_ticks` is reached.
pub fn run_ants(
    state: &mut AntsState,
    variant: &AntsVariant,
    params: &AntsParams,
    rng: &mut RngState,
    max_ticks: u64,
) -> Result<AntsRunResult, AntsError> {
    let none = BTreeMap::new();
    while state.tick < max_ticks && !state.is_finished() {
        step_ants(state, variant, params, rng, &none)?;
    }
    Ok(AntsRunResult {
        delivered: state.delivered,
        ticks: state.tick,
        trail: state.pheromone.clone(),
    })
}
