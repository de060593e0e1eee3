//! Command-line harness for the despeckling toolkit: phantom and
//! speckle generation, filtering, metric evaluation, and the Monte
//! Carlo protocol with its reports.

pub mod config;
pub mod plot;
pub mod rasterio;
pub mod run;
pub mod summary;
