//! Quality metrics for filtered imagery, plus the per-replicate record
//! the Monte Carlo harness assembles from them.
//!
//! All raster-wide statistics use two-pass accumulation in the scalar
//! type (mean first, then centered sums) and the unbiased `n - 1`
//! variance convention throughout.

use crate::error::{Error, Result};
use crate::gamma::RegionSample;
use crate::raster::{Label, LabelRaster, Raster, Rect};
use crate::real::Real;

/// Equivalent number of looks of a homogeneous sample: `mean^2 / var`.
///
/// On speckle over a constant scene this estimates the Gamma shape, so it
/// reads as "how many looks worth of averaging the data carries".
pub fn enl<T: Real>(sample: &RegionSample<T>) -> Result<T> {
    let variance = sample.variance()?;
    if !(variance > T::zero()) {
        return Err(Error::DegenerateSample(format!(
            "equivalent looks need positive variance, got {variance}"
        )));
    }
    let mean = sample.mean();
    Ok(mean * mean / variance)
}

/// Mean relative absolute error over line-labeled pixels:
/// `mean(|filtered - truth| / truth)`. Zero is perfect; larger values
/// mean the filter eroded the thin structures.
pub fn line_preservation<T: Real>(
    filtered: &Raster<T>,
    truth: &Raster<T>,
    labels: &LabelRaster,
) -> Result<T> {
    check_shapes(filtered, truth)?;
    check_label_shape(filtered, labels)?;
    let mut sum = T::zero();
    let mut count = 0usize;
    for r in 0..filtered.height() {
        for c in 0..filtered.width() {
            if labels.get(r, c) != Label::Line {
                continue;
            }
            let t = truth.get(r, c);
            if !(t > T::zero()) {
                return Err(Error::Domain(format!(
                    "truth pixel ({r}, {c}) must be positive on lines, got {t}"
                )));
            }
            sum += (filtered.get(r, c) - t).abs() / t;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Domain("no line-labeled pixels".into()));
    }
    Ok(sum / T::of_usize(count))
}

/// Mean gradient magnitude over edge-band pixels, from mirrored central
/// differences. Degrades toward zero as an edge blurs away.
pub fn edge_gradient<T: Real>(filtered: &Raster<T>, labels: &LabelRaster) -> Result<T> {
    check_label_shape(filtered, labels)?;
    let half = T::of(0.5);
    let mut sum = T::zero();
    let mut count = 0usize;
    for r in 0..filtered.height() {
        for c in 0..filtered.width() {
            if labels.get(r, c) != Label::EdgeBand {
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            let gx = (filtered.get_mirrored(ri, ci + 1) - filtered.get_mirrored(ri, ci - 1)) * half;
            let gy = (filtered.get_mirrored(ri + 1, ci) - filtered.get_mirrored(ri - 1, ci)) * half;
            sum += (gx * gx + gy * gy).sqrt();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Domain("no edge-band pixels".into()));
    }
    Ok(sum / T::of_usize(count))
}

/// Variance of the filtered values over the inner half of the edge band,
/// the band pixels lying on the bright side of the step. Residual
/// speckle shows up as variance where the truth is flat.
///
/// The inner side is recovered from the labels alone: it is the part of
/// the band inside the block's bounding box grown by two pixels.
pub fn edge_variance<T: Real>(filtered: &Raster<T>, labels: &LabelRaster) -> Result<T> {
    check_label_shape(filtered, labels)?;
    let block = bounding_box(labels, Label::Block)?;
    let inner = Rect::new(
        block.row.saturating_sub(2),
        block.col.saturating_sub(2),
        block.height + 4,
        block.width + 4,
    );
    let mut values = Vec::new();
    for r in 0..filtered.height() {
        for c in 0..filtered.width() {
            if labels.get(r, c) == Label::EdgeBand && inner.contains(r, c) {
                values.push(filtered.get(r, c));
            }
        }
    }
    if values.len() < 2 {
        return Err(Error::Domain(format!(
            "inner edge band has {} pixels, need at least 2",
            values.len()
        )));
    }
    let n = T::of_usize(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let mut ss = T::zero();
    for v in &values {
        let d = *v - mean;
        ss += d * d;
    }
    Ok(ss / (n - T::one()))
}

fn bounding_box(labels: &LabelRaster, which: Label) -> Result<Rect> {
    let mut r_lo = usize::MAX;
    let mut r_hi = 0usize;
    let mut c_lo = usize::MAX;
    let mut c_hi = 0usize;
    let mut seen = false;
    for r in 0..labels.height() {
        for c in 0..labels.width() {
            if labels.get(r, c) == which {
                seen = true;
                r_lo = r_lo.min(r);
                r_hi = r_hi.max(r);
                c_lo = c_lo.min(c);
                c_hi = c_hi.max(c);
            }
        }
    }
    if !seen {
        return Err(Error::Domain(format!("no {which:?} pixels in the labels")));
    }
    Ok(Rect::new(r_lo, c_lo, r_hi - r_lo + 1, c_hi - c_lo + 1))
}

/// Universal image quality index between two rasters, in `[-1, 1]` with 1
/// meaning identical up to numerical noise. Product of a correlation
/// term and a joint luminance/contrast term:
/// `(2 s_xy / (s_x^2 + s_y^2)) * (2 mx my / (mx^2 + my^2))`.
pub fn q_index<T: Real>(x: &Raster<T>, y: &Raster<T>) -> Result<T> {
    check_shapes(x, y)?;
    if x.len() < 2 {
        return Err(Error::Domain("quality index needs at least 2 pixels".into()));
    }
    let n = T::of_usize(x.len());
    let mx = x.data().iter().copied().sum::<T>() / n;
    let my = y.data().iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (a, b) in x.data().iter().zip(y.data().iter()) {
        let dx = *a - mx;
        let dy = *b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let denom = n - T::one();
    let (sxy, sxx, syy) = (sxy / denom, sxx / denom, syy / denom);
    if !(sxx > T::zero()) || !(syy > T::zero()) {
        return Err(Error::DegenerateSample(
            "quality index needs positive variance in both images".into(),
        ));
    }
    let mean_sq = mx * mx + my * my;
    if !(mean_sq > T::zero()) {
        return Err(Error::Domain(
            "quality index needs a nonzero mean in at least one image".into(),
        ));
    }
    let two = T::of(2.0);
    let q = (two * sxy / (sxx + syy)) * (two * mx * my / mean_sq);
    Ok(q.min(T::one()).max(-T::one()))
}

/// Four-neighbor Laplacian with mirrored borders:
/// `f(r+1,c) + f(r-1,c) + f(r,c+1) + f(r,c-1) - 4 f(r,c)`.
pub fn laplacian<T: Real>(image: &Raster<T>) -> Raster<T> {
    let four = T::of(4.0);
    Raster::from_fn(image.width(), image.height(), |r, c| {
        let (ri, ci) = (r as isize, c as isize);
        let vertical = image.get_mirrored(ri - 1, ci) + image.get_mirrored(ri + 1, ci);
        let horizontal = image.get_mirrored(ri, ci - 1) + image.get_mirrored(ri, ci + 1);
        vertical + horizontal - four * image.get(r, c)
    })
    .expect("the source raster already has valid dimensions")
}

/// Detail preservation: Pearson correlation between the Laplacians of the
/// two rasters, in `[-1, 1]`. Insensitive to affine intensity changes,
/// sensitive to lost or invented fine structure.
pub fn beta_rho<T: Real>(x: &Raster<T>, y: &Raster<T>) -> Result<T> {
    check_shapes(x, y)?;
    let lx = laplacian(x);
    let ly = laplacian(y);
    let n = T::of_usize(lx.len());
    let mx = lx.data().iter().copied().sum::<T>() / n;
    let my = ly.data().iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (a, b) in lx.data().iter().zip(ly.data().iter()) {
        let dx = *a - mx;
        let dy = *b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > T::zero()) || !(syy > T::zero()) {
        return Err(Error::DegenerateSample(
            "detail correlation needs nonconstant Laplacians".into(),
        ));
    }
    let rho = sxy / (sxx * syy).sqrt();
    Ok(rho.min(T::one()).max(-T::one()))
}

fn check_shapes<T: Real>(a: &Raster<T>, b: &Raster<T>) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::Domain(format!(
            "raster shapes differ: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

fn check_label_shape<T: Real>(a: &Raster<T>, labels: &LabelRaster) -> Result<()> {
    if a.height() != labels.height() || a.width() != labels.width() {
        return Err(Error::Domain(format!(
            "label raster is {}x{} but the image is {}x{}",
            labels.height(),
            labels.width(),
            a.height(),
            a.width()
        )));
    }
    Ok(())
}

/// One row of the Monte Carlo results table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub replicate: u32,
    pub looks: f64,
    pub filter: String,
    pub nel: f64,
    pub line_pres: f64,
    pub edge_grad: f64,
    pub edge_var: f64,
    pub q_index: f64,
    pub beta_rho: f64,
    /// Anything unusual about this replicate; empty on the happy path.
    /// A degenerate ENL patch stores `+inf` in `nel` and flags it here so
    /// summaries can exclude the sentinel.
    pub flags: Vec<String>,
}

/// Evaluates the full metric suite for one filtered replicate.
///
/// Metric failures never abort the run: the affected value is stored as
/// a sentinel (`+inf` for a zero-variance ENL patch, NaN otherwise) and
/// named in `flags`.
pub fn evaluate<T: Real>(
    filtered: &Raster<T>,
    truth: &Raster<T>,
    labels: &LabelRaster,
    enl_patch: Rect,
    replicate: u32,
    looks: f64,
    filter: &str,
) -> MetricsRecord {
    let mut flags = Vec::new();
    let nel = match filtered
        .region_values(enl_patch)
        .map_err(Error::from)
        .and_then(RegionSample::new)
        .and_then(|s| enl(&s))
    {
        Ok(v) => v.to_f64_lossy(),
        Err(Error::DegenerateSample(_)) => {
            flags.push("nel_degenerate".into());
            f64::INFINITY
        }
        Err(_) => {
            flags.push("nel_failed".into());
            f64::NAN
        }
    };
    let mut grab = |name: &str, value: Result<T>| match value {
        Ok(v) => v.to_f64_lossy(),
        Err(_) => {
            flags.push(format!("{name}_failed"));
            f64::NAN
        }
    };
    let line_pres = grab("line_pres", line_preservation(filtered, truth, labels));
    let edge_grad = grab("edge_grad", edge_gradient(filtered, labels));
    let edge_var = grab("edge_var", edge_variance(filtered, labels));
    let q = grab("q_index", q_index(filtered, truth));
    let beta = grab("beta_rho", beta_rho(filtered, truth));
    MetricsRecord {
        replicate,
        looks,
        filter: filter.to_string(),
        nel,
        line_pres,
        edge_grad,
        edge_var,
        q_index: q,
        beta_rho: beta,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_phantom, PhantomSpec};
    use approx::assert_relative_eq;

    fn sample(values: &[f64]) -> RegionSample<f64> {
        RegionSample::new(values.to_vec()).unwrap()
    }

    #[test]
    fn enl_matches_hand_computation() {
        // mean 30, variance 225 -> 900 / 225 = 4.
        let s = sample(&[15.0, 30.0, 45.0]);
        assert_relative_eq!(enl(&s).unwrap(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn enl_rejects_constant_samples() {
        assert!(matches!(
            enl(&sample(&[30.0, 30.0, 30.0])),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn line_preservation_is_zero_on_the_truth_and_scales_with_error() {
        let spec = PhantomSpec::<f64>::default();
        let (truth, labels) = generate_phantom(&spec).unwrap();
        assert_eq!(line_preservation(&truth, &truth, &labels).unwrap(), 0.0);
        // Halving every line pixel gives |60 - 120| / 120 = 0.5 exactly.
        let halved = Raster::from_fn(truth.width(), truth.height(), |r, c| {
            if labels.get(r, c) == Label::Line {
                truth.get(r, c) / 2.0
            } else {
                truth.get(r, c)
            }
        })
        .unwrap();
        assert_relative_eq!(
            line_preservation(&halved, &truth, &labels).unwrap(),
            0.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn edge_gradient_on_the_clean_phantom_matches_the_closed_form() {
        // Around the step: 504 band pixels see one central difference of
        // 45, four corner pixels see 45 in both axes, everything else is
        // flat, and the band holds 1024 pixels.
        let spec = PhantomSpec::<f64>::default();
        let (truth, labels) = generate_phantom(&spec).unwrap();
        let want = (504.0 * 45.0 + 4.0 * 45.0 * std::f64::consts::SQRT_2) / 1024.0;
        assert_relative_eq!(
            edge_gradient(&truth, &labels).unwrap(),
            want,
            max_relative = 1e-14
        );
        assert_relative_eq!(want, 22.397029727760895, max_relative = 1e-15);
    }

    #[test]
    fn edge_variance_is_zero_on_the_clean_phantom_and_sees_noise() {
        let spec = PhantomSpec::<f64>::default();
        let (truth, labels) = generate_phantom(&spec).unwrap();
        // The inner band half is constant at the block level.
        assert_eq!(edge_variance(&truth, &labels).unwrap(), 0.0);
        let noisy = crate::phantom::corrupt(&truth, 4.0, 5).unwrap();
        let v = edge_variance(&noisy, &labels).unwrap();
        // Inner band pixels have mean 120 and variance 120^2 / 4 = 3600.
        assert!(v > 2000.0 && v < 6000.0, "inner band variance {v}");
    }

    #[test]
    fn q_index_is_one_on_identical_images_and_matches_the_example() {
        let x = Raster::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(q_index(&x, &x).unwrap(), 1.0);
        // Shifting by a constant keeps correlation 1 but pays a luminance
        // penalty: x = {1..4}, y = x + 2 gives 2*2.5*4.5 / (2.5^2 + 4.5^2)
        // = 22.5 / 26.5, contrast term 1.
        let y = x.map(|v| v + 2.0);
        assert_relative_eq!(q_index(&x, &y).unwrap(), 22.5 / 26.5, max_relative = 1e-15);
    }

    #[test]
    fn q_index_example_value() {
        // mx = 2, my = 4, s_xy = 2, s_x^2 = 1, s_y^2 = 4:
        // (2*2/5) * (2*8/20) = 0.8 * 0.8 = 0.64.
        let x = Raster::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let y = Raster::new(1, 3, vec![2.0, 4.0, 6.0]).unwrap();
        assert_relative_eq!(q_index(&x, &y).unwrap(), 0.64, max_relative = 1e-15);
    }

    #[test]
    fn q_index_rejects_degenerate_inputs() {
        let x = Raster::filled(2, 2, 5.0).unwrap();
        let y = Raster::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(q_index(&x, &y), Err(Error::DegenerateSample(_))));
        let shaped = Raster::filled(3, 2, 5.0).unwrap();
        assert!(matches!(q_index(&shaped, &y), Err(Error::Domain(_))));
    }

    #[test]
    fn laplacian_of_an_impulse_is_the_stencil() {
        let mut data = vec![0.0; 25];
        data[12] = 5.0;
        let image = Raster::new(5, 5, data).unwrap();
        let lap = laplacian(&image);
        assert_eq!(lap.get(2, 2), -20.0);
        assert_eq!(lap.get(1, 2), 5.0);
        assert_eq!(lap.get(2, 1), 5.0);
        assert_eq!(lap.get(2, 3), 5.0);
        assert_eq!(lap.get(3, 2), 5.0);
        assert_eq!(lap.get(0, 0), 0.0);
        assert_eq!(lap.get(1, 1), 0.0);
    }

    #[test]
    fn laplacian_of_a_ramp_vanishes_in_the_interior() {
        // Integer-valued ramp keeps the arithmetic exact.
        let image = Raster::from_fn(7, 6, |r, c| (3 * r + 2 * c) as f64).unwrap();
        let lap = laplacian(&image);
        for r in 1..5 {
            for c in 1..6 {
                assert_eq!(lap.get(r, c), 0.0, "at ({r}, {c})");
            }
        }
    }

    #[test]
    fn beta_rho_is_one_for_affine_pairs_and_falls_for_blur() {
        let spec = PhantomSpec::<f64>::default();
        let (truth, _) = generate_phantom(&spec).unwrap();
        let affine = truth.map(|v| 3.0 * v + 7.0);
        let rho = beta_rho(&truth, &affine).unwrap();
        assert!((rho - 1.0).abs() < 1e-12, "affine rho = {rho}");
        let blurred = crate::filter::mean_filter(&truth, 5).unwrap();
        let rho_blur = beta_rho(&truth, &blurred).unwrap();
        assert!(rho_blur < rho, "blurred rho = {rho_blur}");
    }

    #[test]
    fn beta_rho_rejects_constant_images() {
        let x = Raster::filled(4, 4, 3.0).unwrap();
        let y = Raster::new(4, 4, (0..16).map(|i| i as f64).collect()).unwrap();
        assert!(matches!(beta_rho(&x, &y), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn evaluate_assembles_a_full_record() {
        let spec = PhantomSpec::<f64>::default();
        let layout = spec.layout().unwrap();
        let (truth, labels) = generate_phantom(&spec).unwrap();
        let noisy = crate::phantom::corrupt(&truth, 4.0, 2).unwrap();
        let record = evaluate(&noisy, &truth, &labels, layout.enl_patch, 7, 4.0, "kl");
        assert_eq!(record.replicate, 7);
        assert_eq!(record.filter, "kl");
        assert!(record.flags.is_empty(), "flags: {:?}", record.flags);
        assert!(record.nel > 3.0 && record.nel < 5.0);
        assert!(record.q_index.abs() <= 1.0);
        assert!(record.beta_rho.abs() <= 1.0);
        assert!(record.line_pres > 0.0);
        assert!(record.edge_var > 0.0);
    }

    #[test]
    fn evaluate_flags_a_degenerate_patch() {
        let spec = PhantomSpec::<f64>::default();
        let layout = spec.layout().unwrap();
        let (truth, labels) = generate_phantom(&spec).unwrap();
        // The truth itself has a constant patch: ENL degenerates.
        let record = evaluate(&truth, &truth, &labels, layout.enl_patch, 0, 1.0, "kl");
        assert!(record.nel.is_infinite());
        assert!(record.flags.iter().any(|f| f == "nel_degenerate"));
    }
}
