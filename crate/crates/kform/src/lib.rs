//! Polynomial differential k-forms on convex bodies, integral k-meshes, and
//! interpolation / least squares by averaging currents.
//!
//! Coordinates are 0-based in memory. Multi-indices and exponents are written
//! 1-based in JSON and in `Display` output.

pub mod approx;
pub mod currents;
pub mod error;
pub mod exterior;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod polyform;

mod comb;

pub use comb::binomial;
pub use error::{Error, Result};
