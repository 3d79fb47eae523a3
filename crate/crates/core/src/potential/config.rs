//! JSON form of a potential model.

use serde::{Deserialize, Serialize};

use super::{PotentialModel, PotentialTerm, TermKind};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dimension: usize,
    pub terms: Vec<TermConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermConfig {
    GaussianBump {
        #[serde(rename = "A")]
        amplitude: f64,
        sigma: f64,
        center: Vec<f64>,
    },
    PolyBump {
        #[serde(rename = "A")]
        amplitude: f64,
        rho: f64,
        center: Vec<f64>,
    },
    SingularPower {
        #[serde(rename = "Z")]
        strength: f64,
        alpha: f64,
        center: Vec<f64>,
    },
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn build(&self) -> Result<PotentialModel> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let (kind, center) = match t {
                    TermConfig::GaussianBump { amplitude, sigma, center } => {
                        (TermKind::Gaussian { amplitude: *amplitude, sigma: *sigma }, center)
                    }
                    TermConfig::PolyBump { amplitude, rho, center } => {
                        (TermKind::PolyBump { amplitude: *amplitude, radius: *rho }, center)
                    }
                    TermConfig::SingularPower { strength, alpha, center } => {
                        (TermKind::Singular { strength: *strength, exponent: *alpha }, center)
                    }
                };
                if center.len() != self.dimension {
                    return Err(Error::InvalidConfig(format!(
                        "center has {} coordinates, dimension is {}",
                        center.len(),
                        self.dimension
                    )));
                }
                let mut c = Vec3::zeros();
                for (k, x) in center.iter().enumerate() {
                    c[k] = *x;
                }
                Ok(PotentialTerm { kind, center: c })
            })
            .collect::<Result<Vec<_>>>()?;
        PotentialModel::new(self.dimension, terms)
    }
}

impl From<&PotentialModel> for ModelConfig {
    fn from(model: &PotentialModel) -> Self {
        let d = model.dimension();
        let terms = model
            .terms()
            .iter()
            .map(|t| {
                let center = t.center.iter().take(d).copied().collect();
                match t.kind {
                    TermKind::Gaussian { amplitude, sigma } => TermConfig::GaussianBump { amplitude, sigma, center },
                    TermKind::PolyBump { amplitude, radius } => TermConfig::PolyBump { amplitude, rho: radius, center },
                    TermKind::Singular { strength, exponent } => {
                        TermConfig::SingularPower { strength, alpha: exponent, center }
                    }
                }
            })
            .collect();
        ModelConfig { dimension: d, terms }
    }
}

impl std::str::FromStr for PotentialModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelConfig::from_json(s)?.build()
    }
}
