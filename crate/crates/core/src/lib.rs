//! Numerical toolkit for the topological degree of classical scattering in
//! smooth, compactly supported or Coulomb-like potentials.
//!
//! Positions and momenta are stored as 3-vectors. Planar models keep the
//! third component at zero; the equations of motion never excite it.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod degree;
pub mod dynamics;
mod error;
pub mod geometry;
pub mod output;
pub mod potential;
pub mod quadrature;
pub mod scattering;
pub mod symbolic;

pub use error::{Error, Result};
pub use geometry::Vec3;
