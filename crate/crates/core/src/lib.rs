//! DCT interpolation filter approximation of the hyperbolic tangent.

pub mod analysis;
pub mod coeffgen;
pub mod datasets;
pub mod error;
pub mod fixedpoint;
pub mod hwmodel;
pub mod nn;
pub mod presets;
pub mod regions;

pub use error::{Error, Result};
