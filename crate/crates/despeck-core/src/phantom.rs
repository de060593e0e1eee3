//! Deterministic phantom scene and speckle corruption for the Monte
//! Carlo protocol.
//!
//! The layout (version 1) places, on a `side x side` grid with integer
//! arithmetic in units of `side`:
//!
//! - a centered square block of side `side/4` at the line intensity,
//!   whose boundary, widened by 2 pixels to each side, is labeled as the
//!   edge band;
//! - three 1-pixel lines at the line intensity: a full vertical line at
//!   column `13 side/16`, a full horizontal line at row `13 side/16`, and
//!   a diagonal `row = col + 5 side/16` running from the left edge to the
//!   bottom edge;
//! - a reserved homogeneous `side/4` square patch with corner at
//!   `(side/32, side/32)`, kept clear of every structure, where the
//!   equivalent number of looks is measured.
//!
//! Lines may cross each other (they share the line intensity); any other
//! structure collision is a construction error, which makes the minimum
//! side of 64 safe by validation rather than by trust.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gamma::positive_gamma_draw;
use crate::raster::{Label, LabelRaster, Raster, Rect};
use crate::real::Real;

/// Layout version tag; new geometries get new tags so results stay
/// comparable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeometryVersion {
    #[default]
    V1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSpec<T> {
    pub side: usize,
    pub background_mean: T,
    pub line_mean: T,
    pub geometry: GeometryVersion,
}

impl<T: Real> Default for PhantomSpec<T> {
    fn default() -> Self {
        Self {
            side: 256,
            background_mean: T::of(30.0),
            line_mean: T::of(120.0),
            geometry: GeometryVersion::V1,
        }
    }
}

/// Pixel placement of every structure, computed from the side length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhantomLayout {
    /// Full block extent (intensity step).
    pub block: Rect,
    /// Outer boundary of the edge band (block grown by 2).
    pub band_outer: Rect,
    /// Inner boundary of the edge band (block shrunk by 2); pixels inside
    /// it keep the block label.
    pub band_inner: Rect,
    pub vertical_col: usize,
    pub horizontal_row: usize,
    /// The diagonal line is `row = col + diagonal_offset`.
    pub diagonal_offset: usize,
    pub enl_patch: Rect,
}

impl<T: Real> PhantomSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.side < 64 {
            return Err(Error::Geometry(format!(
                "phantom side must be at least 64, got {}",
                self.side
            )));
        }
        for (name, v) in [
            ("background_mean", self.background_mean),
            ("line_mean", self.line_mean),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.background_mean == self.line_mean {
            return Err(Error::Domain(
                "line mean must differ from background mean".into(),
            ));
        }
        Ok(())
    }

    /// Computes the structure placement for this spec.
    pub fn layout(&self) -> Result<PhantomLayout> {
        self.validate()?;
        let s = self.side;
        let block_lo = s / 2 - s / 8;
        let block_side = 2 * (s / 8);
        let patch_lo = s / 32;
        let patch_side = s / 4;
        Ok(PhantomLayout {
            block: Rect::new(block_lo, block_lo, block_side, block_side),
            band_outer: Rect::new(block_lo - 2, block_lo - 2, block_side + 4, block_side + 4),
            band_inner: Rect::new(block_lo + 2, block_lo + 2, block_side - 4, block_side - 4),
            vertical_col: 13 * s / 16,
            horizontal_row: 13 * s / 16,
            diagonal_offset: 5 * s / 16,
            enl_patch: Rect::new(patch_lo, patch_lo, patch_side, patch_side),
        })
    }
}

/// Builds the noise-free scene and its label raster.
///
/// Deterministic: equal specs produce identical outputs. Fails with a
/// geometry error if any line would cross the block, the edge band, or
/// the reserved patch.
pub fn generate_phantom<T: Real>(spec: &PhantomSpec<T>) -> Result<(Raster<T>, LabelRaster)> {
    let layout = spec.layout()?;
    let s = spec.side;
    let mut truth = Raster::filled(s, s, spec.background_mean)?;
    let mut labels = LabelRaster::filled(s, s, Label::Background)?;

    for r in layout.block.row..layout.block.row + layout.block.height {
        for c in layout.block.col..layout.block.col + layout.block.width {
            truth.set(r, c, spec.line_mean);
            labels.set(r, c, Label::Block);
        }
    }
    for r in layout.band_outer.row..layout.band_outer.row + layout.band_outer.height {
        for c in layout.band_outer.col..layout.band_outer.col + layout.band_outer.width {
            if !layout.band_inner.contains(r, c) {
                labels.set(r, c, Label::EdgeBand);
            }
        }
    }

    let mut draw_line_pixel = |r: usize, c: usize| -> Result<()> {
        match labels.get(r, c) {
            Label::Background | Label::Line => {
                truth.set(r, c, spec.line_mean);
                labels.set(r, c, Label::Line);
                Ok(())
            }
            other => Err(Error::Geometry(format!(
                "line pixel ({r}, {c}) collides with {other:?}"
            ))),
        }
    };
    for r in 0..s {
        draw_line_pixel(r, layout.vertical_col)?;
    }
    for c in 0..s {
        draw_line_pixel(layout.horizontal_row, c)?;
    }
    for c in 0..s - layout.diagonal_offset {
        draw_line_pixel(c + layout.diagonal_offset, c)?;
    }

    let patch = layout.enl_patch;
    for r in patch.row..patch.row + patch.height {
        for c in patch.col..patch.col + patch.width {
            if labels.get(r, c) != Label::Background {
                return Err(Error::Geometry(format!(
                    "reserved patch pixel ({r}, {c}) is covered by {:?}",
                    labels.get(r, c)
                )));
            }
        }
    }
    Ok((truth, labels))
}

/// Multiplies every pixel by independent unit-mean Gamma speckle of the
/// given looks: each output pixel is a `Gamma(L, L/truth)` draw.
///
/// Pixels are consumed in row-major order from a generator seeded with
/// `seed`, so the output is a pure function of `(truth, looks, seed)`.
pub fn corrupt<T: Real>(truth: &Raster<T>, looks: T, seed: u64) -> Result<Raster<T>> {
    if !(looks > T::zero()) || !looks.is_finite() {
        return Err(Error::Domain(format!(
            "looks must be positive and finite, got {looks}"
        )));
    }
    let shape = looks.to_f64_lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(truth.len());
    for r in 0..truth.height() {
        for c in 0..truth.width() {
            let t = truth.get(r, c);
            if !(t > T::zero()) || !t.is_finite() {
                return Err(Error::Domain(format!(
                    "pixel ({r}, {c}) must be positive and finite, got {t}"
                )));
            }
            data.push(positive_gamma_draw::<T, _>(
                shape,
                t.to_f64_lossy() / shape,
                &mut rng,
            ));
        }
    }
    Raster::new(truth.width(), truth.height(), data)
}
