//! Adaptive quadrature used by the divergence oracles.
//!
//! [`integrate`] is adaptive Simpson on a finite interval;
//! [`integrate_positive_axis`] maps `(0, inf)` onto the log axis and
//! expands the integration window outward until the boundary blocks
//! contribute nothing, which avoids both endpoint singularities and
//! premature convergence on deceptive tails.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Relative tolerance on the value of the integral.
    pub rel_tol: f64,
    /// Absolute floor below which refinement stops.
    pub abs_tol: f64,
    /// Hard cap on integrand evaluations before reporting failure.
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-14, max_evals: 4_000_000 }
    }
}

/// Number of equal panels the interval is pre-split into. A fine initial
/// grid keeps narrow features from hiding between the first sample points;
/// on the log axis the narrowest feature this module meets is a Gamma
/// density with shape 1000, about 0.03 log units wide.
const INITIAL_PANELS: usize = 256;

/// Adaptive Simpson integral of `f` over `[a, b]`.
pub fn integrate<T: Real>(f: &dyn Fn(T) -> T, a: T, b: T, opts: &QuadOptions) -> Result<T> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain("integration bounds must be finite".into()));
    }
    if a > b {
        return Err(Error::Domain("integration bounds must satisfy a <= b".into()));
    }
    if a == b {
        return Ok(T::zero());
    }

    let half = T::of(0.5);
    let panels = T::of_usize(INITIAL_PANELS);
    let step = (b - a) / panels;
    let mut evals = 0usize;

    // Coarse composite pass fixes the absolute error budget.
    let mut nodes = Vec::with_capacity(2 * INITIAL_PANELS + 1);
    for i in 0..=(2 * INITIAL_PANELS) {
        let x = a + step * half * T::of_usize(i);
        nodes.push(f(x));
        evals += 1;
    }
    let mut coarse_abs = T::zero();
    for p in 0..INITIAL_PANELS {
        let (fa, fm, fb) = (nodes[2 * p], nodes[2 * p + 1], nodes[2 * p + 2]);
        coarse_abs += simpson(step, fa, fm, fb).abs();
    }
    let budget = T::of(opts.abs_tol).max(T::of(opts.rel_tol) * coarse_abs);
    let panel_budget = budget / panels;
    // Width floor: below this, apparent error is integrand rounding
    // noise, not discretization error, and refining cannot help.
    let min_width = (b - a) * T::of(1e-11);

    struct Interval<T> {
        a: T,
        b: T,
        fa: T,
        fm: T,
        fb: T,
        whole: T,
        tol: T,
    }

    let mut stack: Vec<Interval<T>> = Vec::with_capacity(64);
    for p in 0..INITIAL_PANELS {
        let pa = a + step * T::of_usize(p);
        let pb = a + step * T::of_usize(p + 1);
        stack.push(Interval {
            a: pa,
            b: pb,
            fa: nodes[2 * p],
            fm: nodes[2 * p + 1],
            fb: nodes[2 * p + 2],
            whole: simpson(step, nodes[2 * p], nodes[2 * p + 1], nodes[2 * p + 2]),
            tol: panel_budget,
        });
    }

    let fifteen = T::of(15.0);
    let mut total = T::zero();
    while let Some(iv) = stack.pop() {
        let m = (iv.a + iv.b) * half;
        let lm = (iv.a + m) * half;
        let rm = (m + iv.b) * half;
        let flm = f(lm);
        let frm = f(rm);
        evals += 2;
        if evals > opts.max_evals {
            return Err(Error::Numerical(format!(
                "quadrature exceeded {} evaluations on [{:e}, {:e}]",
                opts.max_evals, iv.a, iv.b
            )));
        }
        let hw = m - iv.a;
        let left = simpson(hw, iv.fa, flm, iv.fm);
        let right = simpson(hw, iv.fm, frm, iv.fb);
        let err = left + right - iv.whole;
        if err.abs() <= fifteen * iv.tol || (iv.b - iv.a) <= min_width {
            total += left + right + err / fifteen;
        } else {
            let child_tol = iv.tol * half;
            stack.push(Interval { a: iv.a, b: m, fa: iv.fa, fm: flm, fb: iv.fm, whole: left, tol: child_tol });
            stack.push(Interval { a: m, b: iv.b, fa: iv.fm, fm: frm, fb: iv.fb, whole: right, tol: child_tol });
        }
    }
    Ok(total)
}

#[inline]
fn simpson<T: Real>(width: T, fa: T, fm: T, fb: T) -> T {
    width / T::of(6.0) * (fa + T::of(4.0) * fm + fb)
}

/// Width, in log units, of each outward expansion block.
const EXPAND_BLOCK: f64 = 8.0;
/// Maximum expansions per side; covers integrand mass out to
/// `exp(+-(8 + 40 * 8))`, far beyond any representable parameter here.
const MAX_EXPANSIONS: usize = 40;

/// Integral of `f` over `(0, inf)` via the substitution `x = exp(t)`.
///
/// Pre: the integrand's mass is reachable by the expansion (true for any
/// product of Gamma densities with representable parameters). A zero
/// result after full expansion means the integrand is identically
/// negligible, which is the correct value for coincident densities.
pub fn integrate_positive_axis<T: Real>(f: &dyn Fn(T) -> T, opts: &QuadOptions) -> Result<T> {
    let g = move |t: T| {
        let x = t.exp();
        f(x) * x
    };
    let block = T::of(EXPAND_BLOCK);
    let mut lo = -block;
    let mut hi = block;
    let mut total = integrate(&g, lo, hi, opts)?;
    let mut any_mass = total.abs() > T::zero();
    for _ in 0..MAX_EXPANSIONS {
        let left = integrate(&g, lo - block, lo, opts)?;
        let right = integrate(&g, hi, hi + block, opts)?;
        lo = lo - block;
        hi = hi + block;
        total += left + right;
        any_mass |= left.abs() > T::zero() || right.abs() > T::zero();
        // The factor on rel_tol keeps the truncated tail an order below
        // the quadrature tolerance itself.
        let threshold = T::of(opts.abs_tol).max(T::of(opts.rel_tol * 0.01) * total.abs());
        if left.abs() <= threshold && right.abs() <= threshold {
            return Ok(total);
        }
    }
    if any_mass {
        Err(Error::Numerical(
            "positive-axis integral did not localize within the expansion budget".into(),
        ))
    } else {
        Ok(T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_integrated_exactly() {
        // Simpson is exact on cubics.
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let got = integrate(&f, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert_relative_eq!(got, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn oscillatory_integrand_meets_tolerance() {
        let f = |x: f64| (10.0 * x).sin();
        let got = integrate(&f, 0.0, 1.0, &QuadOptions::default()).unwrap();
        let want = (1.0 - (10.0f64).cos()) / 10.0;
        assert_relative_eq!(got, want, max_relative = 1e-9);
    }

    #[test]
    fn degenerate_and_invalid_bounds() {
        let f = |_: f64| 1.0;
        assert_eq!(integrate(&f, 3.0, 3.0, &QuadOptions::default()).unwrap(), 0.0);
        assert!(integrate(&f, 1.0, 0.0, &QuadOptions::default()).is_err());
        assert!(integrate(&f, 0.0, f64::INFINITY, &QuadOptions::default()).is_err());
    }

    #[test]
    fn positive_axis_recovers_exponential_mass() {
        // integral of exp(-x) over (0, inf) = 1.
        let f = |x: f64| (-x).exp();
        let got = integrate_positive_axis(&f, &QuadOptions::default()).unwrap();
        assert_relative_eq!(got, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn positive_axis_handles_mass_away_from_unity() {
        // A Gamma(8, 8/120) density integrates to 1; its mass sits near
        // x = 120, several log units from the window center.
        let p = crate::gamma::GammaParams::new(8.0, 120.0).unwrap();
        let f = move |x: f64| p.density(x);
        let got = integrate_positive_axis(&f, &QuadOptions::default()).unwrap();
        assert_relative_eq!(got, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn positive_axis_zero_integrand_is_zero() {
        let f = |_: f64| 0.0;
        assert_eq!(integrate_positive_axis(&f, &QuadOptions::default()).unwrap(), 0.0);
    }
}
