//! Despeckling toolkit for intensity SAR rasters under the multiplicative
//! Gamma model.
//!
//! Observed intensity is modeled as `Z = X * Y` where `X` is the constant
//! backscatter of a homogeneous region and `Y` is unit-mean Gamma speckle
//! with shape equal to the number of looks `L`, so `Z ~ Gamma(L, L/lambda)`
//! with `E[Z] = lambda` and `Var[Z] = lambda^2 / L`.
//!
//! The crate provides:
//!
//! - [`gamma`]: density, likelihood, moment and maximum-likelihood
//!   estimators, and reproducible sampling for that model;
//! - [`divergence`]: the symmetrized Kullback-Leibler distance between
//!   Gamma laws, its scaled test statistic, and the chi-square decision
//!   rule, plus a direct numeric `(h, phi)` oracle;
//! - [`window`]: the Nagao-Matsuyama 5x5 region masks;
//! - [`filter`]: the stochastic-distance filter built on those pieces,
//!   with Lee and mean filters as baselines;
//! - [`phantom`]: a deterministic cartoon scene with labeled structures
//!   and a speckle corruption step;
//! - [`metrics`]: the quality measures used to score filter output.
//!
//! Everything numeric is generic over the scalar type through [`Real`];
//! [`Raster32`] and [`Raster64`] fix the two supported precisions.

pub mod divergence;
pub mod error;
pub mod filter;
pub mod gamma;
pub mod metrics;
pub mod phantom;
pub mod quad;
pub mod raster;
pub mod real;
pub mod special;
pub mod window;

pub use error::{Error, Result};
pub use real::Real;

/// Single-precision intensity raster.
pub type Raster32 = raster::Raster<f32>;
/// Double-precision intensity raster.
pub type Raster64 = raster::Raster<f64>;
