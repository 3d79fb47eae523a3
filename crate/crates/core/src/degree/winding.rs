use super::{DegreeEstimate, DegreeMethod};
use crate::geometry::signed_angle;
use crate::potential::PotentialModel;
use crate::scattering::{chart_map, MapOptions, ScatterStatus, Scatterer};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
pub struct WindingOptions {
    /// Initial number of intervals of the chart `u in [-1, 1]`.
    pub samples: usize,
    pub map: MapOptions,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self { samples: 256, map: MapOptions::default() }
    }
}

pub fn degree_winding(model: &PotentialModel, energy: f64, theta: &Vec3) -> Result<DegreeEstimate> {
    degree_winding_with(model, energy, theta, &WindingOptions::default())
}

/// Minus the number of counter-clockwise turns of the outgoing direction along
/// the compactified impact line.
pub fn degree_winding_with(
    model: &PotentialModel,
    energy: f64,
    theta: &Vec3,
    opts: &WindingOptions,
) -> Result<DegreeEstimate> {
    if model.dimension() != 2 {
        return Err(Error::InvalidConfig("winding degree needs a planar model".into()));
    }
    let scatterer = Scatterer::new(model, energy, &opts.map.scatter)?;
    let map = chart_map(&scatterer, theta, opts.samples, &opts.map)?.require_complete()?;
    for p in &map.points {
        match p.record.as_ref().map(|r| r.status) {
            Some(ScatterStatus::TrappedTimeout) => return Err(Error::TrappingDetected { energy }),
            Some(ScatterStatus::Failed) => return Err(Error::DiscontinuityDetected { u: p.param }),
            _ => {}
        }
    }
    if let Some(&u) = map.stalled.first() {
        return Err(Error::DiscontinuityDetected { u });
    }
    // Open curve over finite impact parameters; the two closing steps to the
    // points at infinity are what the residual measures.
    let inner = &map.points[1..map.points.len() - 1];
    let turning: f64 = inner.windows(2).map(|w| signed_angle(&w[0].theta_out, &w[1].theta_out)).sum();
    let raw = -turning / std::f64::consts::TAU;
    let narrowest = map.points.windows(2).map(|w| w[1].param - w[0].param).fold(f64::INFINITY, f64::min);
    let level = (2.0 / opts.samples.max(2) as f64 / narrowest).log2().round().max(0.0) as usize;
    Ok(DegreeEstimate::from_raw(energy, DegreeMethod::Winding2d, raw, theta, 2, level, map.points.len()))
}
