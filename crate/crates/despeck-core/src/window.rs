//! Nagao-Matsuyama 5x5 window regions.
//!
//! The 5x5 neighborhood of a pixel is covered by nine overlapping
//! regions treated as separate samples: the central 3x3 (9 pixels) and
//! eight oriented regions of 7 pixels each, every one containing the
//! center pixel. Offsets are (row, col) relative to the center, rows
//! growing downward. Three of the shapes, with `x` marking the center:
//!
//! ```text
//!   central         north           north-east
//!   . . . . .       . n n n .       . . . n n
//!   . c c c .       . n n n .       . . n n n
//!   . c x c .       . . x . .       . . x n .
//!   . c c c .       . . . . .       . . . . .
//!   . . . . .       . . . . .       . . . . .
//! ```
//!
//! The remaining six are the images of `north` and `north-east` under
//! quarter-turn rotations, which is the invariant
//! [`WindowMaskSet::new`] enforces.

use crate::error::{Error, Result};

/// Offset list of one region, relative to the window center.
pub type MaskOffsets = [(i8, i8)];

/// The central 3x3 region.
pub const CENTER: [(i8, i8); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

pub const NORTH: [(i8, i8); 7] =
    [(-2, -1), (-2, 0), (-2, 1), (-1, -1), (-1, 0), (-1, 1), (0, 0)];

pub const EAST: [(i8, i8); 7] = [(-1, 1), (-1, 2), (0, 0), (0, 1), (0, 2), (1, 1), (1, 2)];

pub const SOUTH: [(i8, i8); 7] = [(0, 0), (1, -1), (1, 0), (1, 1), (2, -1), (2, 0), (2, 1)];

pub const WEST: [(i8, i8); 7] =
    [(-1, -2), (-1, -1), (0, -2), (0, -1), (0, 0), (1, -2), (1, -1)];

pub const NORTH_EAST: [(i8, i8); 7] =
    [(-2, 1), (-2, 2), (-1, 0), (-1, 1), (-1, 2), (0, 0), (0, 1)];

pub const SOUTH_EAST: [(i8, i8); 7] = [(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)];

pub const SOUTH_WEST: [(i8, i8); 7] =
    [(0, -1), (0, 0), (1, -2), (1, -1), (1, 0), (2, -2), (2, -1)];

pub const NORTH_WEST: [(i8, i8); 7] =
    [(-2, -2), (-2, -1), (-1, -2), (-1, -1), (-1, 0), (0, -1), (0, 0)];

/// The nine regions of one window: index 0 the central 3x3, 1 to 4 the
/// axial regions (N, E, S, W), 5 to 8 the diagonals (NE, SE, SW, NW).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowMaskSet {
    masks: [Vec<(i8, i8)>; 9],
}

impl WindowMaskSet {
    /// Validates the structural invariants: mask 0 is exactly the central
    /// 3x3; masks 1 to 8 have 7 offsets each, all inside the 5x5 window,
    /// all containing the center; and the eight directional masks are
    /// closed under 90-degree rotation.
    pub fn new(masks: [Vec<(i8, i8)>; 9]) -> Result<Self> {
        let center: Vec<(i8, i8)> = CENTER.to_vec();
        if sorted(&masks[0]) != center {
            return Err(Error::Domain("mask 0 must be the central 3x3".into()));
        }
        for (k, mask) in masks.iter().enumerate().skip(1) {
            if mask.len() != 7 {
                return Err(Error::Domain(format!(
                    "mask {k} must have 7 offsets, got {}",
                    mask.len()
                )));
            }
            if !mask.contains(&(0, 0)) {
                return Err(Error::Domain(format!("mask {k} must contain the center")));
            }
            if mask.iter().any(|&(r, c)| r.abs() > 2 || c.abs() > 2) {
                return Err(Error::Domain(format!("mask {k} leaves the 5x5 window")));
            }
            let unique: std::collections::BTreeSet<_> = mask.iter().collect();
            if unique.len() != mask.len() {
                return Err(Error::Domain(format!("mask {k} repeats an offset")));
            }
        }
        let directional: Vec<Vec<(i8, i8)>> = masks[1..].iter().map(|m| sorted(m)).collect();
        for (k, mask) in directional.iter().enumerate() {
            let rotated = sorted(&mask.iter().map(|&(r, c)| (c, -r)).collect::<Vec<_>>());
            if !directional.contains(&rotated) {
                return Err(Error::Domain(format!(
                    "mask {} rotated is not in the set",
                    k + 1
                )));
            }
        }
        Ok(Self { masks })
    }

    /// The standard Nagao-Matsuyama set.
    pub fn nagao_matsuyama() -> Self {
        let masks = [
            CENTER.to_vec(),
            NORTH.to_vec(),
            EAST.to_vec(),
            SOUTH.to_vec(),
            WEST.to_vec(),
            NORTH_EAST.to_vec(),
            SOUTH_EAST.to_vec(),
            SOUTH_WEST.to_vec(),
            NORTH_WEST.to_vec(),
        ];
        Self::new(masks).expect("the built-in mask set satisfies its invariants")
    }

    pub fn mask(&self, index: usize) -> &MaskOffsets {
        &self.masks[index]
    }

    pub fn masks(&self) -> impl Iterator<Item = &MaskOffsets> {
        self.masks.iter().map(|m| m.as_slice())
    }

    /// The eight directional masks, with their 1-based indices.
    pub fn directional(&self) -> impl Iterator<Item = (usize, &MaskOffsets)> {
        self.masks.iter().enumerate().skip(1).map(|(i, m)| (i, m.as_slice()))
    }
}

fn sorted(mask: &[(i8, i8)]) -> Vec<(i8, i8)> {
    let mut v = mask.to_vec();
    v.sort_unstable();
    v
}
