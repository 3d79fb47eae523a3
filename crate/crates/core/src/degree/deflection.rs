//! Swept angle of a central orbit, computed by quadrature of the orbit equation.

use serde::Serialize;

use crate::potential::RadialProfile;
use crate::quadrature;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeflectionResult {
    pub energy: f64,
    pub l: f64,
    pub r_min: f64,
    /// Total swept polar angle, signed like `l`. Equals pi for free motion.
    pub delta_phi: f64,
    /// `delta_phi - pi` (with the sign of `l`).
    pub deflection: f64,
    pub converged: bool,
}

/// Orbit equation pieces for one `(E, l)` pair, `l > 0`.
pub(crate) struct Orbit<'a> {
    profile: &'a RadialProfile,
    energy: f64,
    l: f64,
    pub r_min: f64,
    // Derivatives of the effective potential at r_min, for the Taylor branch.
    d1: f64,
    d2: f64,
    r_far: f64,
}

const TOL: f64 = 1e-13;

impl<'a> Orbit<'a> {
    pub fn new(profile: &'a RadialProfile, energy: f64, l: f64) -> Result<Self> {
        let l = l.abs();
        if l == 0.0 || !(energy > 0.0) {
            return Err(Error::NoPericentre { energy, l });
        }
        let eff = |r: f64| profile.value(r) + 0.5 * l * l / (r * r);
        let base = (2.0 * l / energy.sqrt()).max(profile.extent(energy / 8.0)).max(1e-300);
        let mut hi = 2.0 * base;
        let mut lo = hi;
        loop {
            lo *= 0.95;
            if lo < 1e-200 {
                return Err(Error::NoPericentre { energy, l });
            }
            if eff(lo) >= energy {
                break;
            }
            hi = lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if eff(mid) >= energy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r_min = hi;
        let (_, f1, f2) = profile.eval(r_min);
        let l2 = l * l;
        Ok(Self {
            profile,
            energy,
            l,
            r_min,
            d1: f1 - l2 / (r_min * r_min * r_min),
            d2: f2 + 3.0 * l2 / (r_min * r_min * r_min * r_min),
            r_far: 1e8 * base.max(r_min),
        })
    }

    pub fn effective(&self, r: f64) -> f64 {
        self.profile.value(r) + 0.5 * self.l * self.l / (r * r)
    }

    /// `E - V_l(r)` at `r = r_min exp(w^2)`, accurate near the turning point.
    fn gap(&self, w2: f64) -> f64 {
        if w2 < 1e-6 {
            let dr = self.r_min * w2.exp_m1();
            -(self.d1 * dr + 0.5 * self.d2 * dr * dr)
        } else {
            self.energy - self.effective(self.r_min * w2.exp())
        }
    }

    fn integrand(&self, w: f64) -> f64 {
        if w == 0.0 {
            // Limit of 2 w l / (r sqrt(2 gap)) as w -> 0.
            return 2.0 * self.l / (self.r_min * (-2.0 * self.d1 * self.r_min).sqrt());
        }
        let w2 = w * w;
        let r = self.r_min * w2.exp();
        2.0 * w * self.l / (r * (2.0 * self.gap(w2)).sqrt())
    }

    /// Angle swept between the turning point and radius `r`.
    pub fn angle_to(&self, r: f64) -> (f64, bool) {
        if r <= self.r_min {
            return (0.0, true);
        }
        let top = (r / self.r_min).ln().sqrt();
        let res = quadrature::integrate(|w| self.integrand(w), 0.0, top, TOL, TOL, 4000);
        (res.value, res.converged && res.value.is_finite())
    }

    /// Angle swept between the turning point and infinity.
    pub fn half_angle(&self) -> (f64, bool) {
        let (inner, ok) = self.angle_to(self.r_far);
        let gap = self.energy - self.effective(self.r_far);
        (inner + self.l / (self.r_far * (2.0 * gap).sqrt()), ok && gap > 0.0)
    }
}

pub fn deflection_quadrature(profile: &RadialProfile, energy: f64, l: f64) -> Result<DeflectionResult> {
    let orbit = Orbit::new(profile, energy, l)?;
    let (half, converged) = orbit.half_angle();
    let delta_phi = (2.0 * half).copysign(l);
    Ok(DeflectionResult {
        energy,
        l,
        r_min: orbit.r_min,
        delta_phi,
        deflection: delta_phi - std::f64::consts::PI.copysign(l),
        converged,
    })
}
