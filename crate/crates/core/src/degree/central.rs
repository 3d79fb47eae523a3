use super::{deflection_quadrature, DegreeEstimate, DegreeMethod};
use crate::potential::{PotentialModel, RadialProfile};
use crate::{Error, Result, Vec3};

/// Degree of a planar central model from swept angles alone:
/// `(delta_phi(l -> infinity) - delta_phi(l -> 0)) / pi`.
///
/// The small-`l` limit is extrapolated from `l = 1e-3` and `1e-4`
/// assuming a linear approach.
pub fn degree_central(model: &PotentialModel, energy: f64) -> Result<DegreeEstimate> {
    if model.dimension() != 2 {
        return Err(Error::InvalidConfig("central degree is computed in the plane".into()));
    }
    let profile = RadialProfile::of_central(model)
        .ok_or_else(|| Error::InvalidConfig("central degree needs all terms on one center".into()))?;
    if !(energy > 0.0) {
        return Err(Error::InvalidConfig(format!("energy must be positive, got {energy}")));
    }
    let k = (2.0 * energy).sqrt();
    let swept = |l: f64| deflection_quadrature(&profile, energy, l).map(|d| d.delta_phi);
    let (a, b) = (swept(1e-3)?, swept(1e-4)?);
    let small = b + (b - a) / 9.0;
    let far_l = 1e8 * k * (1.0 + profile.extent(energy * 1e-3));
    let far = swept(far_l)?;
    let raw = (far - small) / std::f64::consts::PI;
    let theta = Vec3::new(1.0, 0.0, 0.0);
    Ok(DegreeEstimate::from_raw(energy, DegreeMethod::QuadratureCentral, raw, &theta, 2, 0, 3))
}
