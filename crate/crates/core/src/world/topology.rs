use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use super::{angle_between, WorldError};

/// The eight lattice directions. `N` is `y - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir8 {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Dir8 {
    /// Clockwise from north. Used to break ties when quantizing headings.
    pub const CLOCKWISE: [Dir8; 8] = [
        Dir8::N,
        Dir8::NE,
        Dir8::E,
        Dir8::SE,
        Dir8::S,
        Dir8::SW,
        Dir8::W,
        Dir8::NW,
    ];

    /// Neighbor order: orthogonals N, E, S, W then diagonals NE, SE, SW, NW.
    pub const MOORE_ORDER: [Dir8; 8] = [
        Dir8::N,
        Dir8::E,
        Dir8::S,
        Dir8::W,
        Dir8::NE,
        Dir8::SE,
        Dir8::SW,
        Dir8::NW,
    ];

    pub const fn delta(self) -> (i32, i32) {
        match self {
            Dir8::N => (0, -1),
            Dir8::NE => (1, -1),
            Dir8::E => (1, 0),
            Dir8::SE => (1, 1),
            Dir8::S => (0, 1),
            Dir8::SW => (-1, 1),
            Dir8::W => (-1, 0),
            Dir8::NW => (-1, -1),
        }
    }

    /// Heading in degrees (0 = east, counterclockwise).
    pub const fn degrees(self) -> f64 {
        match self {
            Dir8::E => 0.0,
            Dir8::NE => 45.0,
            Dir8::N => 90.0,
            Dir8::NW => 135.0,
            Dir8::W => 180.0,
            Dir8::SW => 225.0,
            Dir8::S => 270.0,
            Dir8::SE => 315.0,
        }
    }

    pub fn from_delta(dx: i32, dy: i32) -> Option<Dir8> {
        Dir8::CLOCKWISE.into_iter().find(|d| d.delta() == (dx, dy))
    }

    /// Direction closest to `heading`; exact ties go to the first candidate
    /// clockwise from north.
    pub fn nearest(heading: f64) -> Dir8 {
        Self::nearest_among(heading, Dir8::CLOCKWISE).expect("non-empty")
    }

    /// Like [`Dir8::nearest`] but restricted to `candidates`, which are
    /// re-ordered clockwise from north before the tie-break.
    pub fn nearest_among(heading: f64, candidates: impl IntoIterator<Item = Dir8>) -> Option<Dir8> {
        let mut cands: ArrayVec<Dir8, 8> = candidates.into_iter().collect();
        cands.sort_by_key(|d| d.clockwise_rank());
        let mut best: Option<(Dir8, f64)> = None;
        for d in cands {
            let diff = angle_between(heading, d.degrees());
            if best.map_or(true, |(_, b)| diff < b) {
                best = Some((d, diff));
            }
        }
        best.map(|(d, _)| d)
    }

    fn clockwise_rank(self) -> usize {
        Dir8::CLOCKWISE.iter().position(|d| *d == self).unwrap()
    }

    pub fn rotate_ccw(self, eighths: i32) -> Dir8 {
        // counterclockwise is backwards in the clockwise table
        let i = (self.clockwise_rank() as i32 - eighths).rem_euclid(8);
        Dir8::CLOCKWISE[i as usize]
    }
}

/// Axis-aligned heading of a moving flame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading4 {
    East,
    North,
    West,
    South,
}

impl Heading4 {
    pub fn from_degrees(deg: f64) -> Result<Self, WorldError> {
        let h = super::normalize_heading(deg);
        match h {
            x if x == 0.0 => Ok(Heading4::East),
            x if x == 90.0 => Ok(Heading4::North),
            x if x == 180.0 => Ok(Heading4::West),
            x if x == 270.0 => Ok(Heading4::South),
            _ => Err(WorldError::NotAxisAligned(deg)),
        }
    }

    pub const fn degrees(self) -> f64 {
        match self {
            Heading4::East => 0.0,
            Heading4::North => 90.0,
            Heading4::West => 180.0,
            Heading4::South => 270.0,
        }
    }

    pub const fn dir(self) -> Dir8 {
        match self {
            Heading4::East => Dir8::E,
            Heading4::North => Dir8::N,
            Heading4::West => Dir8::W,
            Heading4::South => Dir8::S,
        }
    }
}

/// Neighborhood shapes.
///
/// Orders are part of the determinism contract:
/// - `VonNeumann4`: N, E, S, W
/// - `Moore8`: N, E, S, W, NE, SE, SW, NW
/// - `Forward1`: front
/// - `Forward3`: front, front-left, front-right
/// - `Forward5`: front, front-left, front-right, left, right
///
/// "Left" is the counterclockwise side of the heading, so for an east-facing
/// flame front-left is the upper front diagonal and left is the patch above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    VonNeumann4,
    Moore8,
    Forward1(Heading4),
    Forward3(Heading4),
    Forward5(Heading4),
}

impl Topology {
    pub fn arity(self) -> usize {
        match self {
            Topology::VonNeumann4 => 4,
            Topology::Moore8 => 8,
            Topology::Forward1(_) => 1,
            Topology::Forward3(_) => 3,
            Topology::Forward5(_) => 5,
        }
    }

    pub fn directions(self) -> ArrayVec<Dir8, 8> {
        let forward = |h: Heading4, n: usize| {
            let front = h.dir();
            [
                front,
                front.rotate_ccw(1),
                front.rotate_ccw(-1),
                front.rotate_ccw(2),
                front.rotate_ccw(-2),
            ]
            .into_iter()
            .take(n)
            .collect()
        };
        match self {
            Topology::VonNeumann4 => Dir8::MOORE_ORDER[..4].iter().copied().collect(),
            Topology::Moore8 => Dir8::MOORE_ORDER.into_iter().collect(),
            Topology::Forward1(h) => forward(h, 1),
            Topology::Forward3(h) => forward(h, 3),
            Topology::Forward5(h) => forward(h, 5),
        }
    }
}
