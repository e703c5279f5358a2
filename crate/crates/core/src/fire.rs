//! The Fire micro-world.
//!
//! Trees are scattered with independent Bernoulli draws, one or more sparks
//! are lit, and a synchronous frontier spreads under one of five rules:
//! isotropic 4- or 8-neighbor burning, or one of the three moving-flame rules
//! (forward one patch regardless, spawn into the three patches ahead, spawn
//! into the five patches ahead-and-beside).
//!
//! Wind and humidity scale the per-attempt ignition probability:
//!
//! ```text
//! p = clamp(base(humidity) * (1 + strength * cos(wind_dir - dir_to_neighbor)), 0, 1)
//! ```
//!
//! with base 1.0 / 0.7 / 0.4 for low / medium / high humidity. With no wind
//! and low humidity every attempt succeeds and no random numbers are drawn.

use serde::{Deserialize, Serialize};

use crate::world::{
    normalize_heading, Dir8, GridPos, Heading4, Lattice, RngState, Topology, WorldError, WorldGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchFireState {
    #[default]
    Unoccupied,
    Tree,
    Burning,
    Burned,
}

impl PatchFireState {
    pub fn code(self) -> u8 {
        match self {
            PatchFireState::Unoccupied => 0,
            PatchFireState::Tree => 1,
            PatchFireState::Burning => 2,
            PatchFireState::Burned => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FirePatch {
    pub state: PatchFireState,
    /// Whether a tree stood here before ignition.
    pub had_tree: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spread {
    #[serde(rename = "baseline4")]
    Baseline4,
    #[serde(rename = "moore8")]
    Moore8,
    #[serde(rename = "studentA_forward1")]
    StudentAForward1,
    #[serde(rename = "studentB_forward3")]
    StudentBForward3,
    #[serde(rename = "studentC_forward5")]
    StudentCForward5,
}

impl Spread {
    pub fn is_isotropic(self) -> bool {
        matches!(self, Spread::Baseline4 | Spread::Moore8)
    }

    pub fn topology(self, heading: Heading4) -> Topology {
        match self {
            Spread::Baseline4 => Topology::VonNeumann4,
            Spread::Moore8 => Topology::Moore8,
            Spread::StudentAForward1 => Topology::Forward1(heading),
            Spread::StudentBForward3 => Topology::Forward3(heading),
            Spread::StudentCForward5 => Topology::Forward5(heading),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ignition {
    #[serde(rename = "leftEdgeColumn")]
    LeftEdgeColumn,
    #[serde(rename = "leftMiddlePoint")]
    LeftMiddlePoint,
    #[serde(rename = "centerPoint")]
    CenterPoint,
}

impl Ignition {
    pub fn cells(self, lattice: Lattice) -> Vec<GridPos> {
        let mid_y = (lattice.height / 2) as i32;
        match self {
            Ignition::LeftEdgeColumn => (0..lattice.height as i32).map(|y| GridPos::new(0, y)).collect(),
            Ignition::LeftMiddlePoint => vec![GridPos::new(0, mid_y)],
            Ignition::CenterPoint => vec![lattice.center()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Humidity {
    #[default]
    Low,
    Medium,
    High,
}

impl Humidity {
    pub fn base_probability(self) -> f64 {
        match self {
            Humidity::Low => 1.0,
            Humidity::Medium => 0.7,
            Humidity::High => 0.4,
        }
    }
}

/// Wind blowing toward `direction` (degrees, 0 = east).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wind {
    pub direction: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FireVariant {
    pub spread: Spread,
    pub ignition: Ignition,
    /// Heading given to every flame at ignition. Only the moving-flame
    /// rules read it.
    pub heading: Heading4,
    pub wind: Option<Wind>,
    pub humidity: Humidity,
}

impl Default for FireVariant {
    fn default() -> Self {
        Self {
            spread: Spread::Baseline4,
            ignition: Ignition::LeftEdgeColumn,
            heading: Heading4::East,
            wind: None,
            humidity: Humidity::Low,
        }
    }
}

impl FireVariant {
    /// Probability that a burning patch ignites the tree one step along `dir`.
    pub fn ignition_probability(&self, dir: Dir8) -> f64 {
        let base = self.humidity.base_probability();
        let factor = match self.wind {
            Some(w) => 1.0 + w.strength * (w.direction - dir.degrees()).to_radians().cos(),
            None => 1.0,
        };
        (base * factor).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FireError {
    #[error("tree density must lie in [0, 1], got {0}")]
    DensityOutOfRange(f64),
    #[error("wind strength must lie in [0, 1], got {0}")]
    WindStrengthOutOfRange(f64),
    #[error("wind direction must be finite")]
    WindDirectionNotFinite,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// A moving flame of the student rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flame {
    pub pos: GridPos,
    pub heading: Heading4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FireState {
    grid: WorldGrid<FirePatch>,
    /// Burning patches, row-major.
    burning: Vec<GridPos>,
    /// Only populated by the moving-flame rules.
    active_flames: Vec<Flame>,
    tick: u64,
    initial_tree_count: usize,
    burned_trees: usize,
    burned_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FireResult {
    pub percent_burned: f64,
    pub ticks_to_quiescence: u64,
}

/// What a single step did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FireStep {
    /// False when the state was already quiescent and nothing happened.
    pub advanced: bool,
    /// Every patch whose state changed, with its new state.
    pub changed: Vec<(GridPos, PatchFireState)>,
}

/// Plants trees and lights the ignition cells.
pub fn init_fire(
    width: usize,
    height: usize,
    density: f64,
    variant: &FireVariant,
    rng: &mut RngState,
) -> Result<FireState, FireError> {
    if !(0.0..=1.0).contains(&density) {
        return Err(FireError::DensityOutOfRange(density));
    }
    if let Some(w) = variant.wind {
        if !(0.0..=1.0).contains(&w.strength) {
            return Err(FireError::WindStrengthOutOfRange(w.strength));
        }
        if !w.direction.is_finite() {
            return Err(FireError::WindDirectionNotFinite);
        }
    }
    let mut grid: WorldGrid<FirePatch> = WorldGrid::new(width, height, false)?;
    let mut initial_tree_count = 0;
    for patch in grid.patches_mut() {
        if rng.bernoulli(density) {
            patch.state = PatchFireState::Tree;
            patch.had_tree = true;
            initial_tree_count += 1;
        }
    }
    let burning = variant.ignition.cells(grid.lattice());
    for &pos in &burning {
        grid[pos].state = PatchFireState::Burning;
    }
    let active_flames = if variant.spread.is_isotropic() {
        Vec::new()
    } else {
        burning
            .iter()
            .map(|&pos| Flame {
                pos,
                heading: variant.heading,
            })
            .collect()
    };
    Ok(FireState {
        grid,
        burning,
        active_flames,
        tick: 0,
        initial_tree_count,
        burned_trees: 0,
        burned_cells: 0,
    })
}

impl FireState {
    pub fn grid(&self) -> &WorldGrid<FirePatch> {
        &self.grid
    }

    pub fn lattice(&self) -> Lattice {
        self.grid.lattice()
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn initial_tree_count(&self) -> usize {
        self.initial_tree_count
    }

    pub fn burning(&self) -> &[GridPos] {
        &self.burning
    }

    pub fn burning_count(&self) -> usize {
        self.burning.len()
    }

    pub fn burned_count(&self) -> usize {
        self.burned_cells
    }

    pub fn active_flames(&self) -> &[Flame] {
        &self.active_flames
    }

    pub fn is_quiescent(&self) -> bool {
        self.burning.is_empty() && self.active_flames.is_empty()
    }

    pub fn state_at(&self, pos: GridPos) -> PatchFireState {
        self.grid[pos].state
    }

    /// Patches that have caught fire so far (burning or burned).
    pub fn ignited(&self) -> impl Iterator<Item = GridPos> + '_ {
        self.grid.iter().filter_map(|(p, patch)| {
            matches!(patch.state, PatchFireState::Burning | PatchFireState::Burned).then_some(p)
        })
    }

    pub fn is_ignited(&self, pos: GridPos) -> bool {
        matches!(self.grid[pos].state, PatchFireState::Burning | PatchFireState::Burned)
    }

    /// Burned trees over initial trees; 0 for an empty forest.
    pub fn percent_burned(&self) -> f64 {
        if self.initial_tree_count == 0 {
            0.0
        } else {
            self.burned_trees as f64 / self.initial_tree_count as f64
        }
    }

    /// Canonical bytes: patches row-major (state code, had_tree), then flames
    /// in list order (x, y, heading degrees), then the tick.
    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(b"fire");
        out.extend_from_slice(&(self.grid.width() as u32).to_le_bytes());
        out.extend_from_slice(&(self.grid.height() as u32).to_le_bytes());
        for p in self.grid.patches() {
            out.push(p.state.code());
            out.push(p.had_tree as u8);
        }
        out.extend_from_slice(&(self.active_flames.len() as u32).to_le_bytes());
        for f in &self.active_flames {
            out.extend_from_slice(&f.pos.x.to_le_bytes());
            out.extend_from_slice(&f.pos.y.to_le_bytes());
            out.extend_from_slice(&(f.heading.degrees() as u16).to_le_bytes());
        }
        out.extend_from_slice(&self.tick.to_le_bytes());
    }

    fn burn_out(&mut self, pos: GridPos, changed: &mut Vec<(GridPos, PatchFireState)>) {
        let patch = &mut self.grid[pos];
        if patch.state == PatchFireState::Burning {
            patch.state = PatchFireState::Burned;
            self.burned_cells += 1;
            if patch.had_tree {
                self.burned_trees += 1;
            }
            changed.push((pos, PatchFireState::Burned));
        }
    }

    fn try_ignite(
        &mut self,
        pos: GridPos,
        p: f64,
        rng: &mut RngState,
        changed: &mut Vec<(GridPos, PatchFireState)>,
    ) -> bool {
        if self.grid[pos].state != PatchFireState::Tree {
            return false;
        }
        if p < 1.0 && !rng.bernoulli(p) {
            return false;
        }
        self.grid[pos].state = PatchFireState::Burning;
        changed.push((pos, PatchFireState::Burning));
        true
    }

    fn sort_row_major(&mut self) {
        self.burning.sort_unstable_by_key(|p| (p.y, p.x));
        self.active_flames.sort_by_key(|f| (f.pos.y, f.pos.x));
    }
}

/// Advances one synchronous tick. A quiescent state is left untouched and
/// reported with `advanced == false`.
pub fn step_fire(state: &mut FireState, variant: &FireVariant, rng: &mut RngState) -> FireStep {
    if state.is_quiescent() {
        return FireStep::default();
    }
    let lattice = state.lattice();
    let mut changed = Vec::new();
    match variant.spread {
        Spread::Baseline4 | Spread::Moore8 => {
            let topo = variant.spread.topology(variant.heading);
            let frontier = std::mem::take(&mut state.burning);
            let mut next = Vec::new();
            for &pos in &frontier {
                for dir in topo.directions() {
                    let Some(q) = lattice.step(pos, dir) else { continue };
                    if state.try_ignite(q, variant.ignition_probability(dir), rng, &mut changed) {
                        next.push(q);
                    }
                }
            }
            for &pos in &frontier {
                state.burn_out(pos, &mut changed);
            }
            state.burning = next;
        }
        Spread::StudentAForward1 => {
            let flames = std::mem::take(&mut state.active_flames);
            let mut moved = Vec::with_capacity(flames.len());
            for f in &flames {
                state.burn_out(f.pos, &mut changed);
                // moves regardless of what lies ahead and vanishes off-grid
                if let Some(q) = lattice.step(f.pos, f.heading.dir()) {
                    state.try_ignite(q, 1.0, rng, &mut changed);
                    moved.push(Flame {
                        pos: q,
                        heading: f.heading,
                    });
                }
            }
            state.active_flames = moved;
            state.burning = state
                .active_flames
                .iter()
                .map(|f| f.pos)
                .filter(|p| state.grid[*p].state == PatchFireState::Burning)
                .collect();
        }
        Spread::StudentBForward3 | Spread::StudentCForward5 => {
            let flames = std::mem::take(&mut state.active_flames);
            let mut children = Vec::new();
            for f in &flames {
                let topo = variant.spread.topology(f.heading);
                for dir in topo.directions() {
                    let Some(q) = lattice.step(f.pos, dir) else { continue };
                    if state.try_ignite(q, variant.ignition_probability(dir), rng, &mut changed) {
                        children.push(Flame {
                            pos: q,
                            heading: f.heading,
                        });
                    }
                }
            }
            for f in &flames {
                state.burn_out(f.pos, &mut changed);
            }
            state.burning = children.iter().map(|f| f.pos).collect();
            state.active_flames = children;
        }
    }
    state.sort_row_major();
    state.tick += 1;
    FireStep {
        advanced: true,
        changed,
    }
}

/// Default tick budget that bounds every variant: 10 * (width + height).
pub fn default_max_ticks(width: usize, height: usize) -> u64 {
    10 * (width + height) as u64
}

/// Steps until quiescence or `max_ticks`.
pub fn run_fire(
    state: &mut FireState,
    variant: &FireVariant,
    rng: &mut RngState,
    max_ticks: u64,
) -> FireResult {
    while state.tick < max_ticks && !state.is_quiescent() {
        step_fire(state, variant, rng);
    }
    FireResult {
        percent_burned: state.percent_burned(),
        ticks_to_quiescence: state.tick,
    }
}

/// Convenience for headings given in degrees.
pub fn heading_from_degrees(deg: f64) -> Result<Heading4, FireError> {
    Ok(Heading4::from_degrees(normalize_heading(deg))?)
}
