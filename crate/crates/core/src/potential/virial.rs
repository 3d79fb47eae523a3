//! Virial radius: outside it both |V| and |<q, grad V>| stay below E/2, so the
//! virial <q, p> grows strictly and orbits that leave cannot return.

use serde::Serialize;

use super::PotentialModel;
use crate::geometry::directions;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialOptions {
    /// Smallest radius ever returned.
    pub r_floor: f64,
    pub safety_factor: f64,
    /// Largest radius searched before giving up.
    pub ceiling: f64,
    /// Ratio of consecutive radii on the search grid.
    pub growth: f64,
    /// Sampled directions per sphere; `None` picks 256 in the plane, 1024 in space.
    pub directions: Option<usize>,
}

impl Default for VirialOptions {
    fn default() -> Self {
        Self { r_floor: 1.0, safety_factor: 1.25, ceiling: 1e4, growth: 1.1, directions: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialData {
    pub energy: f64,
    /// Certified radius, including the safety factor.
    pub radius: f64,
    /// Boundary of the last violation found on the sampled spheres.
    pub candidate: f64,
    pub safety_factor: f64,
}

pub fn virial_radius(model: &PotentialModel, energy: f64) -> Result<VirialData> {
    virial_radius_with(model, energy, &VirialOptions::default())
}

pub fn virial_radius_with(model: &PotentialModel, energy: f64, opts: &VirialOptions) -> Result<VirialData> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::InvalidConfig(format!("energy must be positive, got {energy}")));
    }
    let d = model.dimension();
    let count = opts.directions.unwrap_or(if d == 2 { 256 } else { 1024 });
    let dirs = directions(d, count);
    let violates = |r: f64| {
        dirs.iter().any(|u| {
            let q = u * r;
            match model.eval(&q) {
                Ok((v, g)) => v.abs() >= 0.5 * energy || q.dot(&g).abs() >= 0.5 * energy,
                Err(_) => true,
            }
        })
    };

    // Walk the whole geometric grid: the last violating radius matters, not the first.
    let mut last_bad: Option<f64> = None;
    let mut r = opts.r_floor * 1e-3;
    while r <= opts.ceiling {
        if violates(r) {
            last_bad = Some(r);
        }
        r *= opts.growth;
    }
    let Some(bad) = last_bad else {
        return Ok(VirialData { energy, radius: opts.r_floor, candidate: 0.0, safety_factor: opts.safety_factor });
    };
    let (mut lo, mut hi) = (bad, bad * opts.growth);
    if hi > opts.ceiling {
        return Err(Error::NoVirialRadius { energy, ceiling: opts.ceiling });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if violates(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(VirialData {
        energy,
        radius: (hi * opts.safety_factor).max(opts.r_floor),
        candidate: hi,
        safety_factor: opts.safety_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialTerm;
    use crate::Vec3;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn free_model_uses_floor() {
        let v = virial_radius(&PotentialModel::free(2), 0.3).unwrap();
        assert_eq!(v.radius, 1.0);
    }

    #[test]
    fn kepler_closed_form() {
        let m = PotentialModel::new(2, vec![PotentialTerm::singular(1.0, 1.0, Vec3::zeros())]).unwrap();
        let v = virial_radius(&m, 1.0).unwrap();
        assert!((v.candidate - 2.0).abs() < 1e-9);
        assert!((v.radius - 2.5).abs() < 1e-8);
    }

    #[test]
    fn gaussian_matches_radial_oracle() {
        let m = PotentialModel::new(2, vec![PotentialTerm::gaussian(2.0, 1.0, Vec3::zeros())]).unwrap();
        // |V| = 2 e^{-r^2}, |r V'| = 4 r^2 e^{-r^2}
        let oracle = bisect(|r| (2.0 * (-r * r).exp()).max(4.0 * r * r * (-r * r).exp()) - 0.5, 1.0, 10.0);
        let v = virial_radius(&m, 1.0).unwrap();
        assert!((v.candidate - oracle).abs() < 0.05 * oracle);
        assert!(v.radius >= oracle);
    }

    #[test]
    fn denser_resampling_never_violates() {
        let m = PotentialModel::new(
            2,
            vec![
                PotentialTerm::gaussian(2.0, 1.0, Vec3::new(3.0, 0.0, 0.0)),
                PotentialTerm::gaussian(2.0, 1.0, Vec3::new(-3.0, 0.0, 0.0)),
            ],
        )
        .unwrap();
        let e = 1.0;
        let v = virial_radius(&m, e).unwrap();
        for u in directions(2, 1024) {
            for k in 0..50 {
                let q = u * v.radius * 1.05f64.powi(k);
                let (val, g) = m.eval(&q).unwrap();
                assert!(val.abs() < e / 2.0 && q.dot(&g).abs() < e / 2.0);
            }
        }
    }

    #[test]
    fn tiny_energy_with_long_tail_fails() {
        let m = PotentialModel::new(2, vec![PotentialTerm::singular(1.0, 0.5, Vec3::zeros())]).unwrap();
        assert!(matches!(virial_radius(&m, 1e-3), Err(Error::NoVirialRadius { .. })));
    }

    #[test]
    fn long_range_force_decay() {
        let m = PotentialModel::new(2, vec![PotentialTerm::singular(1.0, 1.5, Vec3::zeros())]).unwrap();
        let rv = virial_radius(&m, 1.0).unwrap().radius;
        let mut prev = f64::INFINITY;
        for k in 0..=30 {
            let r = rv * 10f64.powf(k as f64 / 10.0);
            let sup = directions(2, 64).iter().map(|u| m.eval(&(u * r)).unwrap().1.norm()).fold(0.0, f64::max);
            assert!(r * sup < prev);
            prev = r * sup;
        }
    }
}
