//! Row-major rasters for intensities and structure labels.

use crate::error::{Error, Result};

/// Rectangular region of a raster, in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn new(row: usize, col: usize, height: usize, width: usize) -> Self {
        Self { row, col, height, width }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row && row < self.row + self.height && col >= self.col && col < self.col + self.width
    }
}

/// Row-major grid of scalar intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Raster<T> {
    /// Wraps existing row-major data; `data.len()` must equal
    /// `width * height` and both dimensions must be positive.
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Domain(format!(
                "raster data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Constant-valued raster.
    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a raster by evaluating `f(row, col)` over the grid.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col] = value;
    }

    /// Reads with symmetric border reflection, so any integer coordinate is
    /// valid: index -1 maps to 0, index `n` maps to `n - 1`, and so on.
    #[inline]
    pub fn get_mirrored(&self, row: isize, col: isize) -> T {
        let r = mirror_index(row, self.height);
        let c = mirror_index(col, self.width);
        self.data[r * self.width + c]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies the values inside `rect` in row-major order.
    pub fn region_values(&self, rect: Rect) -> Result<Vec<T>> {
        if rect.row + rect.height > self.height || rect.col + rect.width > self.width {
            return Err(Error::Domain(format!(
                "region {rect:?} exceeds raster {}x{}",
                self.width, self.height
            )));
        }
        let mut out = Vec::with_capacity(rect.height * rect.width);
        for row in rect.row..rect.row + rect.height {
            for col in rect.col..rect.col + rect.width {
                out.push(self.get(row, col));
            }
        }
        Ok(out)
    }

    /// Checks that another raster has the same dimensions.
    pub fn same_shape<U: Copy>(&self, other: &Raster<U>) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Symmetric reflection of an out-of-range index into `[0, n)`.
#[inline]
fn mirror_index(index: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let mut i = index;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Structure classes of the phantom scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Label {
    Background = 0,
    Line = 1,
    Block = 2,
    EdgeBand = 3,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(value: u8) -> Result<Self> {
        match value {
            0 => Ok(Label::Background),
            1 => Ok(Label::Line),
            2 => Ok(Label::Block),
            3 => Ok(Label::EdgeBand),
            other => Err(Error::Domain(format!("unknown label code {other}"))),
        }
    }

    pub const ALL: [Label; 4] = [Label::Background, Label::Line, Label::Block, Label::EdgeBand];
}

/// Row-major grid of structure labels, aligned with an intensity raster.
pub type LabelRaster = Raster<Label>;

impl LabelRaster {
    /// Number of pixels carrying each label, indexed by label code.
    pub fn counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for &label in self.data() {
            counts[label.as_u8() as usize] += 1;
        }
        counts
    }
}
