//! Passage between asymptotic data `(direction, impact parameter)` and phase
//! states at finite distance.
//!
//! Models whose far field is a central power law are matched exactly through the
//! orbit equation of that tail. Short-range models use free flight.

use crate::degree::Orbit;
use crate::dynamics::PhaseState;
use crate::potential::{PotentialModel, RadialProfile};
use crate::{Result, Vec3};

#[derive(Debug, Clone)]
pub(crate) enum Tail {
    Free,
    Central { center: Vec3, profile: RadialProfile },
}

impl Tail {
    pub fn of(model: &PotentialModel) -> Self {
        let singular: Vec<_> = model.terms().iter().filter(|t| t.is_singular()).collect();
        if singular.is_empty() {
            return Tail::Free;
        }
        if let Some(center) = model.common_center() {
            if let Some(profile) = RadialProfile::of_central(model) {
                return Tail::Central { center, profile };
            }
        }
        if singular.len() == 1 {
            // Bumps are negligible at launch and extraction distances.
            return Tail::Central { center: singular[0].center, profile: RadialProfile::new(vec![singular[0].kind]) };
        }
        Tail::Free
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Tail::Central { .. })
    }
}

/// Component of `v` orthogonal to the unit vector `dir`.
pub(crate) fn perp(v: &Vec3, dir: &Vec3) -> Vec3 {
    v - dir * v.dot(dir)
}

/// Outgoing asymptote `(direction, impact parameter)` of an escaping state.
pub(crate) fn outgoing(tail: &Tail, energy: f64, x: &PhaseState) -> Result<(Vec3, Vec3)> {
    match tail {
        Tail::Free => {
            let dir = x.p.normalize();
            Ok((dir, perp(&x.q, &dir)))
        }
        Tail::Central { center, profile } => {
            let k = (2.0 * energy).sqrt();
            let rel = x.q - center;
            let r = rel.norm();
            let ang = rel.cross(&x.p);
            let l = ang.norm();
            let dir = if l <= 1e-14 * r * k {
                if rel.dot(&x.p) >= 0.0 {
                    rel / r
                } else {
                    -rel / r
                }
            } else {
                let orbit = Orbit::new(profile, energy, l)?;
                let (half, _) = orbit.half_angle();
                let (to_here, _) = orbit.angle_to(r);
                let psi = if rel.dot(&x.p) >= 0.0 { half - to_here } else { half + to_here };
                let e1 = rel / r;
                let e2 = (ang / l).cross(&e1);
                e1 * psi.cos() + e2 * psi.sin()
            };
            let b_rel = dir.cross(&ang) / k;
            Ok((dir, perp(center, &dir) + perp(&b_rel, &dir)))
        }
    }
}

/// Incoming asymptote, by time reversal of [`outgoing`].
pub(crate) fn incoming(tail: &Tail, energy: f64, x: &PhaseState) -> Result<(Vec3, Vec3)> {
    let reversed = PhaseState::new(x.q, -x.p, x.t);
    let (dir, b) = outgoing(tail, energy, &reversed)?;
    Ok((-dir, b))
}

/// State on the orbit with incoming asymptote `(theta, b)` at distance about
/// `hypot(radius, |b|)` from the tail center.
pub(crate) fn launch(
    model: &PotentialModel,
    tail: &Tail,
    energy: f64,
    theta: &Vec3,
    b: &Vec3,
    radius: f64,
) -> Result<PhaseState> {
    let k = (2.0 * energy).sqrt();
    match tail {
        Tail::Free => {
            let q = -theta * radius + b;
            let v = model.value(&q)?;
            Ok(PhaseState::new(q, theta * (2.0 * (energy - v)).max(0.0).sqrt(), 0.0))
        }
        Tail::Central { center, profile } => {
            let b_rel = perp(&(b - center), theta);
            let l = b_rel.norm() * k;
            let rho = radius.hypot(b_rel.norm());
            let e1 = -theta;
            let (q, tangent, l) = if l == 0.0 {
                (center + e1 * rho, Vec3::zeros(), 0.0)
            } else {
                let normal = b_rel.cross(theta).normalize();
                let e2 = normal.cross(&e1);
                let orbit = Orbit::new(profile, energy, l)?;
                let (half, _) = orbit.half_angle();
                let (to_here, _) = orbit.angle_to(rho);
                let psi = half - to_here;
                let radial = e1 * psi.cos() + e2 * psi.sin();
                (center + radial * rho, normal.cross(&radial), l)
            };
            let radial = (q - center) / rho;
            let v = model.value(&q)?;
            let p_t = l / rho;
            let p_r = (2.0 * (energy - v) - p_t * p_t).max(0.0).sqrt();
            Ok(PhaseState::new(q, tangent * p_t - radial * p_r, 0.0))
        }
    }
}
