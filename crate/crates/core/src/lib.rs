//! Analytical model and Monte Carlo validator for uplink massive MIMO with
//! fractional pilot reuse in Poisson cellular networks.

pub mod area_models;
pub mod coverage_se;
mod error;
pub mod geometry;
pub mod interference;
pub mod numerics;
pub mod pilots;
pub mod simulate;

pub use error::{Error, Result};
