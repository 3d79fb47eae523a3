//! Admissible potentials: sums of Gaussian bumps, compactly supported
//! polynomial bumps and at most a handful of attractive power-law singularities.

mod config;
mod hill;
mod profile;
mod virial;

use nalgebra::Matrix3;

pub use config::{ModelConfig, TermConfig};
pub use hill::{hill_analysis, HillAnalysis, HillClass, HillComponent, HillLoop};
pub use profile::RadialProfile;
pub use virial::{virial_radius, virial_radius_with, VirialData, VirialOptions};

use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermKind {
    /// `A exp(-|q-s|^2 / sigma^2)`
    Gaussian { amplitude: f64, sigma: f64 },
    /// `A (1 - |q-s|^2/rho^2)^3` inside the ball of radius `rho`, zero outside.
    PolyBump { amplitude: f64, radius: f64 },
    /// `-Z |q-s|^(-alpha)`
    Singular { strength: f64, exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTerm {
    pub kind: TermKind,
    pub center: Vec3,
}

impl PotentialTerm {
    pub fn gaussian(amplitude: f64, sigma: f64, center: Vec3) -> Self {
        Self { kind: TermKind::Gaussian { amplitude, sigma }, center }
    }

    pub fn poly_bump(amplitude: f64, radius: f64, center: Vec3) -> Self {
        Self { kind: TermKind::PolyBump { amplitude, radius }, center }
    }

    pub fn singular(strength: f64, exponent: f64, center: Vec3) -> Self {
        Self { kind: TermKind::Singular { strength, exponent }, center }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !self.center.iter().all(|c| c.is_finite()) {
            return bad("term center must be finite");
        }
        match self.kind {
            TermKind::Gaussian { amplitude, sigma } => {
                if !amplitude.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
                    return bad("gaussian_bump needs finite A and sigma > 0");
                }
            }
            TermKind::PolyBump { amplitude, radius } => {
                if !amplitude.is_finite() || !(radius > 0.0 && radius.is_finite()) {
                    return bad("poly_bump needs finite A and rho > 0");
                }
            }
            TermKind::Singular { strength, exponent } => {
                if !(strength > 0.0 && strength.is_finite()) {
                    return bad("singular_power needs Z > 0");
                }
                if !(exponent > 0.0 && exponent < 2.0) {
                    return bad("singular_power needs alpha in (0, 2)");
                }
            }
        }
        Ok(())
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.kind, TermKind::Singular { .. })
    }

    /// Value, gradient and Hessian at `q`. `None` at a singular center.
    fn eval2(&self, q: &Vec3) -> Option<(f64, Vec3, Matrix3<f64>)> {
        let x = q - self.center;
        let r2 = x.norm_squared();
        let outer = x * x.transpose();
        match self.kind {
            TermKind::Gaussian { amplitude, sigma } => {
                let s2 = sigma * sigma;
                let v = amplitude * (-r2 / s2).exp();
                let g = x * (-2.0 * v / s2);
                let h = (Matrix3::identity() * (-2.0 / s2) + outer * (4.0 / (s2 * s2))) * v;
                Some((v, g, h))
            }
            TermKind::PolyBump { amplitude, radius } => {
                let p2 = radius * radius;
                let u = 1.0 - r2 / p2;
                if u <= 0.0 {
                    return Some((0.0, Vec3::zeros(), Matrix3::zeros()));
                }
                let v = amplitude * u * u * u;
                let c = -6.0 * amplitude / p2;
                let g = x * (c * u * u);
                let h = (Matrix3::identity() * (u * u) - outer * (4.0 * u / p2)) * c;
                Some((v, g, h))
            }
            TermKind::Singular { strength, exponent } => {
                if r2 == 0.0 {
                    return None;
                }
                let r = r2.sqrt();
                let ra = r.powf(-exponent);
                let v = -strength * ra;
                let c = exponent * strength * ra / r2;
                let g = x * c;
                let h = (Matrix3::identity() - outer * ((exponent + 2.0) / r2)) * c;
                Some((v, g, h))
            }
        }
    }

    fn eval1(&self, q: &Vec3) -> Option<(f64, Vec3)> {
        let x = q - self.center;
        let r2 = x.norm_squared();
        match self.kind {
            TermKind::Gaussian { amplitude, sigma } => {
                let s2 = sigma * sigma;
                let v = amplitude * (-r2 / s2).exp();
                Some((v, x * (-2.0 * v / s2)))
            }
            TermKind::PolyBump { amplitude, radius } => {
                let p2 = radius * radius;
                let u = 1.0 - r2 / p2;
                if u <= 0.0 {
                    return Some((0.0, Vec3::zeros()));
                }
                Some((amplitude * u * u * u, x * (-6.0 * amplitude * u * u / p2)))
            }
            TermKind::Singular { strength, exponent } => {
                if r2 == 0.0 {
                    return None;
                }
                let ra = r2.powf(-0.5 * exponent);
                Some((-strength * ra, x * (exponent * strength * ra / r2)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialModel {
    dimension: usize,
    terms: Vec<PotentialTerm>,
}

impl PotentialModel {
    pub fn new(dimension: usize, terms: Vec<PotentialTerm>) -> Result<Self> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::InvalidConfig(format!("dimension must be 2 or 3, got {dimension}")));
        }
        for t in &terms {
            t.validate()?;
            if dimension == 2 && t.center.z != 0.0 {
                return Err(Error::InvalidConfig("planar model with non-planar center".into()));
            }
        }
        Ok(Self { dimension, terms })
    }

    pub fn free(dimension: usize) -> Self {
        Self::new(dimension, Vec::new()).expect("free model is valid")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    /// Index of the singular term, if there is exactly one.
    /// Several singular terms are rejected because no single regularization applies.
    pub fn singular_index(&self) -> Result<Option<usize>> {
        let mut it = self.terms.iter().enumerate().filter(|(_, t)| t.is_singular());
        let first = it.next().map(|(i, _)| i);
        if it.next().is_some() {
            return Err(Error::InvalidConfig("operation needs at most one singular term".into()));
        }
        Ok(first)
    }

    pub fn has_singularity(&self) -> bool {
        self.terms.iter().any(|t| t.is_singular())
    }

    /// Common center if every term is centered at the same point.
    pub fn common_center(&self) -> Option<Vec3> {
        let first = self.terms.first()?.center;
        self.terms.iter().all(|t| (t.center - first).norm() <= 1e-12 * (1.0 + first.norm())).then_some(first)
    }

    pub fn eval(&self, q: &Vec3) -> Result<(f64, Vec3)> {
        let mut v = 0.0;
        let mut g = Vec3::zeros();
        for (index, t) in self.terms.iter().enumerate() {
            let (tv, tg) = t.eval1(q).ok_or(Error::EvaluationAtSingularity { index })?;
            v += tv;
            g += tg;
        }
        Ok((v, g))
    }

    pub fn value(&self, q: &Vec3) -> Result<f64> {
        self.eval(q).map(|(v, _)| v)
    }

    /// Value, gradient and Hessian.
    pub fn eval_hessian(&self, q: &Vec3) -> Result<(f64, Vec3, Matrix3<f64>)> {
        let mut v = 0.0;
        let mut g = Vec3::zeros();
        let mut h = Matrix3::zeros();
        for (index, t) in self.terms.iter().enumerate() {
            let (tv, tg, th) = t.eval2(q).ok_or(Error::EvaluationAtSingularity { index })?;
            v += tv;
            g += tg;
            h += th;
        }
        Ok((v, g, h))
    }

    /// Radius of a ball around the origin containing every term center and
    /// most of every bump.
    pub fn extent(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let width = match t.kind {
                    TermKind::Gaussian { sigma, .. } => 3.0 * sigma,
                    TermKind::PolyBump { radius, .. } => radius,
                    TermKind::Singular { .. } => 0.0,
                };
                t.center.norm() + width
            })
            .fold(0.0, f64::max)
    }

    /// Smallest width among the smooth terms.
    pub fn feature_length(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter_map(|t| match t.kind {
                TermKind::Gaussian { sigma, .. } => Some(sigma),
                TermKind::PolyBump { radius, .. } => Some(radius),
                TermKind::Singular { .. } => None,
            })
            .reduce(f64::min)
    }

    /// Supremum of the potential, located by multistart ascent.
    /// Attracting singularities contribute nothing; the result is never below 0,
    /// the limit at infinity.
    pub fn vmax(&self) -> f64 {
        let mut seeds: Vec<Vec3> = self.terms.iter().filter(|t| !t.is_singular()).map(|t| t.center).collect();
        if seeds.is_empty() {
            return 0.0;
        }
        let half = self.extent().max(1.0);
        let n = if self.dimension == 2 { 24 } else { 10 };
        let nz = if self.dimension == 2 { 1 } else { n + 1 };
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..nz {
                    let c = |m: usize| -half + 2.0 * half * m as f64 / n as f64;
                    let z = if self.dimension == 2 { 0.0 } else { c(k) };
                    seeds.push(Vec3::new(c(i), c(j), z));
                }
            }
        }
        seeds.iter().filter_map(|s| self.ascend(*s)).fold(0.0, f64::max)
    }

    fn ascend(&self, mut q: Vec3) -> Option<f64> {
        let (mut v, mut g) = self.eval(&q).ok()?;
        let mut step = 0.1;
        for _ in 0..5000 {
            if self.dimension == 2 {
                g.z = 0.0;
            }
            let gn = g.norm();
            if gn < 1e-14 * (1.0 + v.abs()) {
                break;
            }
            let mut accepted = false;
            while step > 1e-300 {
                let trial = q + g * (step / gn);
                match self.eval(&trial) {
                    Ok((tv, tg)) if tv > v => {
                        q = trial;
                        v = tv;
                        g = tg;
                        step *= 1.5;
                        accepted = true;
                        break;
                    }
                    _ => step *= 0.5,
                }
            }
            if !accepted || step < 1e-15 * (1.0 + q.norm()) {
                break;
            }
        }
        Some(v)
    }
}
