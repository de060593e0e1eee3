//! Stochastic distances between Gamma laws and the two-sample test built
//! on them.
//!
//! The family is the `(h, phi)`-divergence `h(integral of phi(f1/fi) fi)`;
//! symmetrizing and scaling by `2mn/(m+n) * k` yields a statistic that is
//! asymptotically chi-square under parameter equality. Only the
//! Kullback-Leibler instance (`phi = x ln x`, `h = identity`, `k = 1`) is
//! wired into the filter; [`hphi_divergence_numeric`] is the direct
//! quadrature oracle and the extension point for other instances.

use crate::error::{Error, Result};
use crate::quad::{integrate_positive_axis, QuadOptions};
use crate::real::Real;
use crate::special;

/// A divergence instance: its scaling constant `k` and the degrees of
/// freedom of the asymptotic chi-square law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceSpec {
    pub name: &'static str,
    pub scale_constant: f64,
    pub degrees_of_freedom: u32,
}

impl DivergenceSpec {
    pub fn new(name: &'static str, scale_constant: f64, degrees_of_freedom: u32) -> Result<Self> {
        if !(scale_constant > 0.0) || !scale_constant.is_finite() {
            return Err(Error::Domain(format!(
                "scale constant must be positive and finite, got {scale_constant}"
            )));
        }
        if degrees_of_freedom == 0 {
            return Err(Error::Domain("degrees of freedom must be at least 1".into()));
        }
        Ok(Self { name, scale_constant, degrees_of_freedom })
    }

    /// The symmetrized Kullback-Leibler instance: the statistic depends on
    /// the two means only (one pooled shape), so the effective null has
    /// one free parameter.
    pub fn kullback_leibler() -> Self {
        Self { name: "kullback-leibler", scale_constant: 1.0, degrees_of_freedom: 1 }
    }
}

/// Outcome of one two-sample test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome<T> {
    pub statistic: T,
    pub p_value: T,
    /// True exactly when `p_value >= significance`.
    pub accepted: bool,
    pub degrees_of_freedom: u32,
}

/// Symmetrized Kullback-Leibler distance between two Gamma laws sharing
/// the shape `shared_looks`:
/// `d = L * ((m1^2 + mi^2) / (2 m1 mi) - 1)`.
///
/// Symmetric in the means, zero iff they are equal, and invariant under
/// joint scaling of both means.
pub fn kl_distance_gamma<T: Real>(mean_1: T, mean_i: T, shared_looks: T) -> Result<T> {
    for (name, v) in [("mean_1", mean_1), ("mean_i", mean_i), ("shared_looks", shared_looks)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::Domain(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let two = T::of(2.0);
    // By AM-GM the kernel is nonnegative; rounding can push near-equal
    // means a few ulps below zero, so clamp rather than propagate it.
    let kernel =
        ((mean_1 * mean_1 + mean_i * mean_i) / (two * mean_1 * mean_i) - T::one()).max(T::zero());
    Ok(shared_looks * kernel)
}

/// Scales a symmetrized distance into the test statistic
/// `S = (2 m n / (m + n)) * k * d`.
pub fn scaled_statistic<T: Real>(
    spec: &DivergenceSpec,
    m: usize,
    n: usize,
    distance: T,
) -> Result<T> {
    if m < 2 || n < 2 {
        return Err(Error::Domain(format!(
            "sample sizes must be at least 2, got m={m}, n={n}"
        )));
    }
    if !distance.is_finite() || distance < T::zero() {
        return Err(Error::Domain(format!(
            "distance must be nonnegative and finite, got {distance}"
        )));
    }
    let prefactor = T::of_usize(2 * m * n) / T::of_usize(m + n);
    Ok(prefactor * T::of(spec.scale_constant) * distance)
}

/// Kullback-Leibler test statistic between two samples with the given
/// estimated means and pooled shape.
///
/// Explicit sizes and means keep the arithmetic identical whether the
/// caller holds materialized samples or running sums; the by-sample
/// wrapper is [`kl_statistic`].
pub fn kl_statistic_sized<T: Real>(
    m: usize,
    n: usize,
    mean_1: T,
    mean_i: T,
    shared_looks: T,
) -> Result<T> {
    let d = kl_distance_gamma(mean_1, mean_i, shared_looks)?;
    scaled_statistic(&DivergenceSpec::kullback_leibler(), m, n, d)
}

/// As [`kl_statistic_sized`] with sizes taken from the samples.
pub fn kl_statistic<T: Real>(
    sample_1: &crate::gamma::RegionSample<T>,
    sample_i: &crate::gamma::RegionSample<T>,
    shared_looks: T,
    mean_1: T,
    mean_i: T,
) -> Result<T> {
    kl_statistic_sized(sample_1.len(), sample_i.len(), mean_1, mean_i, shared_looks)
}

/// Arithmetic mean of the two directed divergences.
pub fn symmetrize<T: Real>(d_forward: T, d_backward: T) -> Result<T> {
    if !d_forward.is_finite() || !d_backward.is_finite() {
        return Err(Error::Domain("directed divergences must be finite".into()));
    }
    Ok((d_forward + d_backward) * T::of(0.5))
}

/// The `phi` of the Kullback-Leibler kernel, `x ln x`, continuously
/// extended by `phi(0) = 0`.
pub fn kl_phi<T: Real>(ratio: T) -> T {
    if ratio > T::zero() {
        ratio * ratio.ln()
    } else {
        T::zero()
    }
}

/// The identity `h` of the Kullback-Leibler instance.
pub fn identity_h<T: Real>(x: T) -> T {
    x
}

/// Directed `(h, phi)`-divergence `h(integral of phi(f1/fi) * fi dx)` over
/// `(0, inf)` by adaptive quadrature at 1e-9 relative tolerance.
///
/// This is the oracle the closed forms are tested against. Where `fi`
/// falls out of the scalar type's normal range the integrand is treated
/// as zero: subnormals carry so few significand bits that the ratio
/// turns into refinement-stalling noise, and for densities whose
/// log-separation stays inside the exponent range (roughly
/// `|ln f1 - ln fi| < 700` for `f64`, the oracle's validity domain) the
/// true contribution of such points is far below the tolerance.
pub fn hphi_divergence_numeric<T: Real>(
    density_1: &dyn Fn(T) -> T,
    density_i: &dyn Fn(T) -> T,
    phi: &dyn Fn(T) -> T,
    h: &dyn Fn(T) -> T,
) -> Result<T> {
    let integrand = move |x: T| {
        let fi = density_i(x);
        if !(fi > T::min_positive_value()) {
            return T::zero();
        }
        let ratio = density_1(x) / fi;
        if !ratio.is_finite() {
            return T::zero();
        }
        phi(ratio) * fi
    };
    let opts = QuadOptions::default();
    let inner = integrate_positive_axis(&integrand, &opts)?;
    Ok(h(inner))
}

/// Upper-tail probability `Pr(chi2_df > statistic)`.
pub fn chi2_p_value<T: Real>(statistic: T, degrees_of_freedom: u32) -> Result<T> {
    if degrees_of_freedom == 0 {
        return Err(Error::Domain("degrees of freedom must be at least 1".into()));
    }
    if !(statistic >= T::zero()) || !statistic.is_finite() {
        return Err(Error::Domain(format!(
            "statistic must be nonnegative and finite, got {statistic}"
        )));
    }
    let a = T::of(f64::from(degrees_of_freedom)) * T::of(0.5);
    Ok(special::reg_upper_gamma(a, statistic * T::of(0.5)))
}

/// Chi-square decision at level `significance`: accept the null exactly
/// when the p-value is at least the level.
pub fn decide<T: Real>(
    statistic: T,
    degrees_of_freedom: u32,
    significance: T,
) -> Result<TestOutcome<T>> {
    if !(significance > T::zero()) || !(significance < T::one()) {
        return Err(Error::Domain(format!(
            "significance must lie in (0, 1), got {significance}"
        )));
    }
    let p_value = chi2_p_value(statistic, degrees_of_freedom)?;
    Ok(TestOutcome {
        statistic,
        p_value,
        accepted: p_value >= significance,
        degrees_of_freedom,
    })
}
