//! Despeckling filters: the stochastic-distance filter over
//! Nagao-Matsuyama neighborhoods, the classical Lee filter, and a plain
//! mean filter.
//!
//! The stochastic-distance filter estimates the Gamma law on the central
//! 3x3 sample of each pixel, tests each of the eight directional regions
//! for distributional equality with the center via the Kullback-Leibler
//! statistic, and averages the center sample with every accepted region.
//! All filters read only from the input raster and write each output
//! pixel once, so results are independent of traversal order and worker
//! count.

use rayon::prelude::*;

use crate::divergence::{decide, kl_statistic_sized, TestOutcome};
use crate::error::{Error, Result};
use crate::gamma::{clamp_looks, solve_looks, LooksSolve, RegionSample, LOOKS_MAX, LOOKS_MIN};
use crate::raster::Raster;
use crate::real::Real;
use crate::window::{MaskOffsets, WindowMaskSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMethod {
    Kl,
    Lee,
    Mean,
}

impl std::fmt::Display for FilterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FilterMethod::Kl => "kl",
            FilterMethod::Lee => "lee",
            FilterMethod::Mean => "mean",
        })
    }
}

impl std::str::FromStr for FilterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(FilterMethod::Kl),
            "lee" => Ok(FilterMethod::Lee),
            "mean" => Ok(FilterMethod::Mean),
            other => Err(Error::Domain(format!(
                "unknown filter method '{other}' (expected kl, lee, or mean)"
            ))),
        }
    }
}

/// Where the shared shape of the two-sample statistic comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LooksMode<T> {
    /// Maximum-likelihood fit on the pooled union of the two compared
    /// samples (symmetric, uses all 16 pixels).
    PooledMle,
    /// The nominal looks of the acquisition.
    Fixed(T),
}

/// How pixels shared by several accepted masks enter the output average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnionMode {
    /// Multiset union: a pixel contributes once per mask occurrence.
    Pooled,
    /// Each distinct pixel contributes once.
    Dedup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderPolicy {
    /// Symmetric reflection, edge pixel included.
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig<T> {
    pub method: FilterMethod,
    /// Significance level of the per-region test (the eta of the
    /// chi-square decision).
    pub significance: T,
    pub looks_mode: LooksMode<T>,
    pub union_mode: UnionMode,
    pub degrees_of_freedom: u32,
    pub border: BorderPolicy,
    /// Nominal looks of the acquisition; drives the Lee filter's noise
    /// variance and the `Fixed` looks mode.
    pub nominal_looks: T,
    /// Window side for the Lee and mean filters.
    pub window_side: usize,
}

impl<T: Real> FilterConfig<T> {
    /// Stochastic-distance filter at the given significance level, with
    /// pooled shape estimation and multiset-union averaging.
    pub fn kl(significance: T) -> Self {
        Self {
            method: FilterMethod::Kl,
            significance,
            looks_mode: LooksMode::PooledMle,
            union_mode: UnionMode::Pooled,
            degrees_of_freedom: 1,
            border: BorderPolicy::Mirror,
            nominal_looks: T::one(),
            window_side: 5,
        }
    }

    /// Lee filter with the classical 5x5 window.
    pub fn lee(nominal_looks: T) -> Self {
        Self {
            method: FilterMethod::Lee,
            nominal_looks,
            ..Self::kl(T::of(0.05))
        }
    }

    /// Plain boxcar baseline.
    pub fn mean() -> Self {
        Self {
            method: FilterMethod::Mean,
            ..Self::kl(T::of(0.05))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.significance > T::zero()) || !(self.significance < T::one()) {
            return Err(Error::Domain(format!(
                "significance must lie in (0, 1), got {}",
                self.significance
            )));
        }
        if let LooksMode::Fixed(l) = self.looks_mode {
            if !l.is_finite() || l < T::of(LOOKS_MIN) || l > T::of(LOOKS_MAX) {
                return Err(Error::Domain(format!(
                    "fixed looks must lie in [{LOOKS_MIN}, {LOOKS_MAX}], got {l}"
                )));
            }
        }
        if !(self.nominal_looks > T::zero()) || !self.nominal_looks.is_finite() {
            return Err(Error::Domain(format!(
                "nominal looks must be positive and finite, got {}",
                self.nominal_looks
            )));
        }
        if self.degrees_of_freedom == 0 {
            return Err(Error::Domain("degrees of freedom must be at least 1".into()));
        }
        if !matches!(self.window_side, 3 | 5 | 7) {
            return Err(Error::Domain(format!(
                "window side must be 3, 5, or 7, got {}",
                self.window_side
            )));
        }
        Ok(())
    }
}

impl<T: Real> Default for FilterConfig<T> {
    fn default() -> Self {
        Self::kl(T::of(0.05))
    }
}

/// Reads the nine region samples around `(row, col)`, mirror-reflected at
/// the borders. Pre: the image is positive-valued (enforced upstream by
/// [`filter_image`]; direct callers own the check).
pub fn extract_regions<T: Real>(
    image: &Raster<T>,
    row: usize,
    col: usize,
    masks: &WindowMaskSet,
) -> [RegionSample<T>; 9] {
    std::array::from_fn(|k| {
        let values = masks
            .mask(k)
            .iter()
            .map(|&(dr, dc)| {
                image.get_mirrored(row as isize + dr as isize, col as isize + dc as isize)
            })
            .collect();
        RegionSample::new_unchecked(values)
    })
}

/// Running sums of one region sample; the accumulation order is the
/// mask's declaration order, which keeps results bit-reproducible.
#[derive(Debug, Clone, Copy)]
struct RegionMoments<T> {
    sum: T,
    sum_sq: T,
    log_sum: T,
}

impl<T: Real> RegionMoments<T> {
    fn gather(
        image: &Raster<T>,
        ln_image: &Raster<T>,
        row: isize,
        col: isize,
        mask: &MaskOffsets,
    ) -> Self {
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        let mut log_sum = T::zero();
        for &(dr, dc) in mask {
            let r = row + dr as isize;
            let c = col + dc as isize;
            let v = image.get_mirrored(r, c);
            sum += v;
            sum_sq += v * v;
            log_sum += ln_image.get_mirrored(r, c);
        }
        Self { sum, sum_sq, log_sum }
    }
}

/// Pooled-union shape estimate from the running sums of both samples.
///
/// A union whose log-moment spread vanishes (numerically constant data)
/// gets the upper clamp; the statistic then depends on the means alone,
/// which is the documented degenerate rule.
fn pooled_shape<T: Real>(a: &RegionMoments<T>, b: &RegionMoments<T>, count: usize) -> T {
    let n = T::of_usize(count);
    let sum = a.sum + b.sum;
    let mean = sum / n;
    let spread = mean.ln() - (a.log_sum + b.log_sum) / n;
    // Moments initialization; the one-pass sums can cancel on
    // near-constant data, but the solver is bracket-safeguarded, so the
    // initialization only affects iteration count.
    let ss = (a.sum_sq + b.sum_sq) - sum * sum / n;
    let init = if ss > T::zero() {
        clamp_looks(mean * mean / (ss / (n - T::one())))
    } else {
        T::of(LOOKS_MAX)
    };
    match solve_looks(spread, init) {
        LooksSolve::Degenerate => T::of(LOOKS_MAX),
        LooksSolve::Fitted { looks, .. } => looks,
    }
}

/// One stochastic-distance pixel: output value plus the eight region test
/// outcomes in directional mask order.
fn kl_pixel<T: Real>(
    image: &Raster<T>,
    ln_image: &Raster<T>,
    row: isize,
    col: isize,
    masks: &WindowMaskSet,
    config: &FilterConfig<T>,
) -> (T, [TestOutcome<T>; 8]) {
    let trivially_accepted = TestOutcome {
        statistic: T::zero(),
        p_value: T::one(),
        accepted: true,
        degrees_of_freedom: config.degrees_of_freedom,
    };
    let mut outcomes = [trivially_accepted; 8];

    // A constant window short-circuits to the constant. This keeps the
    // constant fixed point exact to the bit, which summed averages of
    // arbitrary floats cannot guarantee.
    let mut lo = image.get_mirrored(row - 2, col - 2);
    let mut hi = lo;
    for dr in -2..=2 {
        for dc in -2..=2 {
            let v = image.get_mirrored(row + dr, col + dc);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo == hi {
        return (lo, outcomes);
    }

    let center = RegionMoments::gather(image, ln_image, row, col, masks.mask(0));
    let m = masks.mask(0).len();
    let center_mean = center.sum / T::of_usize(m);

    let mut regions: [Option<RegionMoments<T>>; 8] = [None; 8];
    for (i, mask) in masks.directional() {
        let region = RegionMoments::gather(image, ln_image, row, col, mask);
        let n = mask.len();
        let region_mean = region.sum / T::of_usize(n);
        let shape = match config.looks_mode {
            LooksMode::Fixed(l) => l,
            LooksMode::PooledMle => pooled_shape(&center, &region, m + n),
        };
        let statistic = kl_statistic_sized(m, n, center_mean, region_mean, shape)
            .expect("positive means and a clamped shape always yield a valid statistic");
        let outcome = decide(statistic, config.degrees_of_freedom, config.significance)
            .expect("the significance level was validated");
        outcomes[i - 1] = outcome;
        regions[i - 1] = Some(region);
    }

    let value = match config.union_mode {
        UnionMode::Pooled => {
            let mut total = center.sum;
            let mut count = m;
            for (i, mask) in masks.directional() {
                if outcomes[i - 1].accepted {
                    total += regions[i - 1].expect("gathered above").sum;
                    count += mask.len();
                }
            }
            // With every region rejected this is exactly the central mean.
            total / T::of_usize(count)
        }
        UnionMode::Dedup => {
            let mut marked = [[false; 5]; 5];
            let mut mark = |mask: &MaskOffsets| {
                for &(dr, dc) in mask {
                    marked[(dr + 2) as usize][(dc + 2) as usize] = true;
                }
            };
            mark(masks.mask(0));
            for (i, mask) in masks.directional() {
                if outcomes[i - 1].accepted {
                    mark(mask);
                }
            }
            let mut total = T::zero();
            let mut count = 0usize;
            for dr in -2..=2isize {
                for dc in -2..=2isize {
                    if marked[(dr + 2) as usize][(dc + 2) as usize] {
                        total += image.get_mirrored(row + dr, col + dc);
                        count += 1;
                    }
                }
            }
            total / T::of_usize(count)
        }
    };
    (value, outcomes)
}

/// Stochastic-distance output for one pixel.
pub fn filter_pixel_kl<T: Real>(
    image: &Raster<T>,
    row: usize,
    col: usize,
    masks: &WindowMaskSet,
    config: &FilterConfig<T>,
) -> Result<T> {
    filter_pixel_kl_detail(image, row, col, masks, config).map(|(value, _)| value)
}

/// As [`filter_pixel_kl`], also returning the eight directional test
/// outcomes in mask order (N, E, S, W, NE, SE, SW, NW).
pub fn filter_pixel_kl_detail<T: Real>(
    image: &Raster<T>,
    row: usize,
    col: usize,
    masks: &WindowMaskSet,
    config: &FilterConfig<T>,
) -> Result<(T, [TestOutcome<T>; 8])> {
    config.validate()?;
    let ln_image = image.map(|v| v.ln());
    Ok(kl_pixel(image, &ln_image, row as isize, col as isize, masks, config))
}

/// Applies the configured filter to the whole raster.
///
/// Output is a pure function of `(image, config)`: rows are processed in
/// parallel but every pixel reads only the input, so worker count cannot
/// change a single bit of the result.
pub fn filter_image<T: Real>(image: &Raster<T>, config: &FilterConfig<T>) -> Result<Raster<T>> {
    config.validate()?;
    validate_positive(image)?;
    match config.method {
        FilterMethod::Kl => {
            let masks = WindowMaskSet::nagao_matsuyama();
            let ln_image = image.map(|v| v.ln());
            par_rows(image, |r, c| {
                kl_pixel(image, &ln_image, r, c, &masks, config).0
            })
        }
        FilterMethod::Lee => lee_filter(image, config.nominal_looks, config.window_side),
        FilterMethod::Mean => mean_filter(image, config.window_side),
    }
}

/// Classical local-statistics MMSE (Lee) filter.
///
/// Per pixel over the window: `x = mean + w (z - mean)` with
/// `w = max(0, 1 - Cu^2/Cz^2)`, `Cu^2 = 1/looks`, `Cz^2 = var/mean^2`
/// using the unbiased window variance. Flat windows (including any with
/// zero mean) take `w = 0`.
pub fn lee_filter<T: Real>(
    image: &Raster<T>,
    nominal_looks: T,
    window_side: usize,
) -> Result<Raster<T>> {
    if !(nominal_looks > T::zero()) || !nominal_looks.is_finite() {
        return Err(Error::Domain(format!(
            "nominal looks must be positive and finite, got {nominal_looks}"
        )));
    }
    if !matches!(window_side, 3 | 5 | 7) {
        return Err(Error::Domain(format!(
            "window side must be 3, 5, or 7, got {window_side}"
        )));
    }
    validate_positive(image)?;
    let half = (window_side / 2) as isize;
    let count = T::of_usize(window_side * window_side);
    let cu2 = nominal_looks.recip();
    par_rows(image, |r, c| {
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        let mut lo = image.get_mirrored(r - half, c - half);
        let mut hi = lo;
        for dr in -half..=half {
            for dc in -half..=half {
                let v = image.get_mirrored(r + dr, c + dc);
                sum += v;
                sum_sq += v * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo == hi {
            // Constant window: exact fixed point.
            return lo;
        }
        let mean = sum / count;
        let var = (sum_sq - sum * sum / count) / (count - T::one());
        let w = if mean > T::zero() && var > T::zero() {
            let cz2 = var / (mean * mean);
            (T::one() - cu2 / cz2).max(T::zero())
        } else {
            T::zero()
        };
        let z = image.get(r as usize, c as usize);
        mean + w * (z - mean)
    })
}

/// Boxcar mean with mirror padding. `window_side` must be odd and at
/// least 3.
pub fn mean_filter<T: Real>(image: &Raster<T>, window_side: usize) -> Result<Raster<T>> {
    if window_side < 3 || window_side % 2 == 0 {
        return Err(Error::Domain(format!(
            "window side must be odd and at least 3, got {window_side}"
        )));
    }
    let half = (window_side / 2) as isize;
    let count = T::of_usize(window_side * window_side);
    par_rows(image, |r, c| {
        let mut sum = T::zero();
        let mut lo = image.get_mirrored(r - half, c - half);
        let mut hi = lo;
        for dr in -half..=half {
            for dc in -half..=half {
                let v = image.get_mirrored(r + dr, c + dc);
                sum += v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo == hi {
            return lo;
        }
        sum / count
    })
}

/// Evaluates `f` at every pixel, rows in parallel, and assembles the
/// output raster in row order.
fn par_rows<T: Real>(
    image: &Raster<T>,
    f: impl Fn(isize, isize) -> T + Sync,
) -> Result<Raster<T>> {
    let width = image.width();
    let f = &f;
    let data: Vec<T> = (0..image.height())
        .into_par_iter()
        .flat_map_iter(move |r| (0..width).map(move |c| f(r as isize, c as isize)))
        .collect();
    Raster::new(width, image.height(), data)
}

/// Rejects rasters that carry nonpositive or non-finite pixels, naming
/// the first offending coordinate.
fn validate_positive<T: Real>(image: &Raster<T>) -> Result<()> {
    for r in 0..image.height() {
        for c in 0..image.width() {
            let v = image.get(r, c);
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "pixel ({r}, {c}) must be positive and finite, got {v}"
                )));
            }
        }
    }
    Ok(())
}
