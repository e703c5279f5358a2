//! Lattice geometry, neighborhoods, scalar fields and the seeded generator
//! shared by the Fire and Ants micro-worlds.
//!
//! Coordinates: `x` grows eastward, `y` grows southward (row 0 is the top row).
//! Headings are in degrees with 0° = east, 90° = north, counterclockwise
//! positive, so a heading of 90° moves a patch from `(x, y)` to `(x, y - 1)`.

mod field;
mod rng;
mod topology;

pub use field::{field_diffuse, field_evaporate, ScalarField};
pub use rng::{rng_next, RngState};
pub use topology::{Dir8, Heading4, Topology};

use serde::{Deserialize, Serialize};

/// Smallest legal width or height.
pub const MIN_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("grid must be at least {MIN_DIM}x{MIN_DIM}, got {width}x{height}")]
    DimensionTooSmall { width: usize, height: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    FractionOutOfRange { name: &'static str, value: f64 },
    #[error("position ({x}, {y}) is outside a {width}x{height} grid")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
    #[error("heading {0}° is not axis-aligned (0, 90, 180 or 270)")]
    NotAxisAligned(f64),
}

/// One patch coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub x: i32,
    pub y: i32,
}

impl GridPos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn chebyshev(self, other: GridPos) -> u32 {
        (self.x - other.x)
            .unsigned_abs()
            .max((self.y - other.y).unsigned_abs())
    }

    pub fn manhattan(self, other: GridPos) -> u32 {
        (self.x - other.x).unsigned_abs() + (self.y - other.y).unsigned_abs()
    }
}

impl std::fmt::Display for GridPos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Shape and edge rule of a lattice, shared by grids and fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub width: usize,
    pub height: usize,
    pub wrap: bool,
}

impl Lattice {
    pub fn new(width: usize, height: usize, wrap: bool) -> Result<Self, WorldError> {
        if width < MIN_DIM || height < MIN_DIM {
            return Err(WorldError::DimensionTooSmall { width, height });
        }
        Ok(Self {
            width,
            height,
            wrap,
        })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, pos: GridPos) -> bool {
        pos.x >= 0 && pos.y >= 0 && (pos.x as usize) < self.width && (pos.y as usize) < self.height
    }

    pub fn check(&self, pos: GridPos) -> Result<(), WorldError> {
        if self.contains(pos) {
            Ok(())
        } else {
            Err(WorldError::OutOfBounds {
                x: pos.x as i64,
                y: pos.y as i64,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Row-major index. Caller guarantees `pos` is in bounds.
    #[inline]
    pub fn index(&self, pos: GridPos) -> usize {
        debug_assert!(self.contains(pos));
        pos.y as usize * self.width + pos.x as usize
    }

    #[inline]
    pub fn pos(&self, index: usize) -> GridPos {
        GridPos::new((index % self.width) as i32, (index / self.width) as i32)
    }

    pub fn center(&self) -> GridPos {
        GridPos::new((self.width / 2) as i32, (self.height / 2) as i32)
    }

    /// Applies an offset, wrapping on a torus and returning `None` when a
    /// bounded grid is left.
    #[inline]
    pub fn offset(&self, pos: GridPos, dx: i32, dy: i32) -> Option<GridPos> {
        let (x, y) = (pos.x + dx, pos.y + dy);
        if self.wrap {
            Some(GridPos::new(
                x.rem_euclid(self.width as i32),
                y.rem_euclid(self.height as i32),
            ))
        } else {
            let p = GridPos::new(x, y);
            self.contains(p).then_some(p)
        }
    }

    pub fn step(&self, pos: GridPos, dir: Dir8) -> Option<GridPos> {
        let (dx, dy) = dir.delta();
        self.offset(pos, dx, dy)
    }

    /// In-bounds neighbors of `pos` under `topo`, in the fixed order
    /// documented on [`Topology`].
    pub fn neighbors(&self, pos: GridPos, topo: Topology) -> arrayvec::ArrayVec<GridPos, 8> {
        topo.directions()
            .into_iter()
            .filter_map(|d| self.step(pos, d))
            .collect()
    }

    pub fn positions(&self) -> impl Iterator<Item = GridPos> + '_ {
        (0..self.len()).map(move |i| self.pos(i))
    }
}

/// Dense row-major array of per-patch records.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldGrid<P> {
    lattice: Lattice,
    patches: Vec<P>,
}

impl<P: Default + Clone> WorldGrid<P> {
    /// All patches start as `P::default()`, the empty record.
    pub fn new(width: usize, height: usize, wrap: bool) -> Result<Self, WorldError> {
        let lattice = Lattice::new(width, height, wrap)?;
        Ok(Self::with_lattice(lattice))
    }

    pub fn with_lattice(lattice: Lattice) -> Self {
        Self {
            lattice,
            patches: vec![P::default(); lattice.len()],
        }
    }
}

impl<P> WorldGrid<P> {
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn width(&self) -> usize {
        self.lattice.width
    }

    pub fn height(&self) -> usize {
        self.lattice.height
    }

    pub fn get(&self, pos: GridPos) -> Option<&P> {
        self.lattice
            .contains(pos)
            .then(|| &self.patches[self.lattice.index(pos)])
    }

    pub fn get_mut(&mut self, pos: GridPos) -> Option<&mut P> {
        if self.lattice.contains(pos) {
            let i = self.lattice.index(pos);
            Some(&mut self.patches[i])
        } else {
            None
        }
    }

    pub fn patches(&self) -> &[P] {
        &self.patches
    }

    pub fn patches_mut(&mut self) -> &mut [P] {
        &mut self.patches
    }

    pub fn iter(&self) -> impl Iterator<Item = (GridPos, &P)> + '_ {
        self.patches
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.lattice.pos(i), p))
    }
}

impl<P> std::ops::Index<GridPos> for WorldGrid<P> {
    type Output = P;

    fn index(&self, pos: GridPos) -> &P {
        &self.patches[self.lattice.index(pos)]
    }
}

impl<P> std::ops::IndexMut<GridPos> for WorldGrid<P> {
    fn index_mut(&mut self, pos: GridPos) -> &mut P {
        let i = self.lattice.index(pos);
        &mut self.patches[i]
    }
}

/// Smallest absolute difference between two headings, in [0, 180].
pub fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Folds any finite angle into [0, 360).
pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}
