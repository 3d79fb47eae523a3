//! Radial profile of a central model, used by the deflection-angle quadrature
//! and by the asymptotic matching of power-law tails.

use super::{PotentialModel, TermKind};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    terms: Vec<TermKind>,
}

impl RadialProfile {
    pub fn new(terms: Vec<TermKind>) -> Self {
        Self { terms }
    }

    /// Profile of a model whose terms all share one center.
    pub fn of_central(model: &PotentialModel) -> Option<Self> {
        if model.terms().is_empty() {
            return Some(Self::new(Vec::new()));
        }
        model.common_center()?;
        Some(Self::new(model.terms().iter().map(|t| t.kind).collect()))
    }

    pub fn terms(&self) -> &[TermKind] {
        &self.terms
    }

    /// Value and first two radial derivatives.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for kind in &self.terms {
            let (f, d1, d2) = match *kind {
                TermKind::Gaussian { amplitude, sigma } => {
                    let s2 = sigma * sigma;
                    let f = amplitude * (-r * r / s2).exp();
                    (f, -2.0 * r / s2 * f, (-2.0 / s2 + 4.0 * r * r / (s2 * s2)) * f)
                }
                TermKind::PolyBump { amplitude, radius } => {
                    let p2 = radius * radius;
                    let u = 1.0 - r * r / p2;
                    if u <= 0.0 {
                        (0.0, 0.0, 0.0)
                    } else {
                        let c = -6.0 * amplitude / p2;
                        (amplitude * u * u * u, c * r * u * u, c * (u * u - 4.0 * r * r * u / p2))
                    }
                }
                TermKind::Singular { strength, exponent } => {
                    let f = -strength * r.powf(-exponent);
                    (f, -exponent * f / r, exponent * (exponent + 1.0) * f / (r * r))
                }
            };
            out.0 += f;
            out.1 += d1;
            out.2 += d2;
        }
        out
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// A radius beyond which every term is below `eps` in magnitude.
    pub fn extent(&self, eps: f64) -> f64 {
        let n = self.terms.len().max(1) as f64;
        let eps = eps / n;
        self.terms
            .iter()
            .map(|kind| match *kind {
                TermKind::Gaussian { amplitude, sigma } => sigma * (amplitude.abs() / eps).ln().max(0.0).sqrt(),
                TermKind::PolyBump { radius, .. } => radius,
                TermKind::Singular { strength, exponent } => (strength / eps).powf(1.0 / exponent),
            })
            .fold(0.0, f64::max)
    }
}
