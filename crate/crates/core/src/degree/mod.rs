//! Topological degree of the compactified final-direction map.

mod central;
mod deflection;
mod lagrange;
mod sphere;
mod winding;

use serde::Serialize;

use crate::Vec3;

pub use central::degree_central;
pub(crate) use deflection::Orbit;
pub use deflection::{deflection_quadrature, DeflectionResult};
pub use lagrange::{
    lagrange_degree, lagrange_degree_with, LagrangeOptions, LagrangeProjection, LagrangeResult, Preimage,
};
pub use sphere::{degree_sphere, degree_sphere_with, SphereOptions};
pub use winding::{degree_winding, degree_winding_with, WindingOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMethod {
    Winding2d,
    Sphere3d,
    QuadratureCentral,
    LagrangeProjection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeEstimate {
    #[serde(rename = "E")]
    pub energy: f64,
    pub method: DegreeMethod,
    pub value: i64,
    /// Distance of the raw estimate to the nearest integer.
    pub residual: f64,
    pub raw: f64,
    pub refinement_level: usize,
    #[serde(rename = "theta")]
    pub theta_used: Vec<f64>,
    pub samples: usize,
}

impl DegreeEstimate {
    pub(crate) fn from_raw(
        energy: f64,
        method: DegreeMethod,
        raw: f64,
        theta: &Vec3,
        dim: usize,
        refinement_level: usize,
        samples: usize,
    ) -> Self {
        let value = raw.round();
        Self {
            energy,
            method,
            value: value as i64,
            residual: (raw - value).abs(),
            raw,
            refinement_level,
            theta_used: theta.as_slice()[..dim].to_vec(),
            samples,
        }
    }
}
