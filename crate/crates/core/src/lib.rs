//! Numerical laboratory for singular warped-product metric disks.
//!
//! * [`density`]: warping densities, admissibility, radial measures.
//! * [`geometry`]: distances on warped surfaces and metric cones.
//! * [`isoperimetry`]: candidate isoperimetric regions and the scale scan.
//! * [`chordarc`]: chord-arc tests for planar Jordan curves.
//! * [`plateau`]: discrete energy-minimizing disks in a conformal chart.

pub mod chordarc;
pub mod density;
pub mod error;
pub mod geometry;
pub mod isoperimetry;
pub mod plateau;
pub mod quad;

pub use error::{Error, Result};
