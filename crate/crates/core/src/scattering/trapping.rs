//! Sampled evidence for trapping or non-trapping at a list of energies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ScatterOptions, ScatterStatus, Scatterer};
use crate::geometry::{any_orthogonal, directions, rot90, unit_at};
use crate::potential::{hill_analysis, HillClass, PotentialModel};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
pub struct SamplePlan {
    /// Incoming directions on the launch grid.
    pub directions: usize,
    /// Impact parameters per direction, spread over `[-B, B]` with `B` the virial radius.
    pub impacts: usize,
    /// Extra launches with random direction and impact parameter.
    pub monte_carlo: usize,
    pub seed: u64,
    pub hill_resolution: usize,
    pub scatter: ScatterOptions,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            directions: 8,
            impacts: 17,
            monte_carlo: 32,
            seed: 0,
            hill_resolution: 400,
            scatter: ScatterOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanClass {
    NontrappingEvidence,
    TrappingDetected,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanEvidence {
    /// The allowed region has a bounded component; bounded orbits exist there.
    HillMultiComponent,
    /// Some launch did not escape before its timeout.
    Timeout,
    /// Every launch escaped.
    AllEscaped,
    /// Integration failures prevent a verdict.
    Failures,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyScanEntry {
    pub energy: f64,
    pub hill: Option<HillClass>,
    pub launches: usize,
    pub timeouts: usize,
    pub failures: usize,
    pub fraction_timed_out: f64,
    pub max_flight_time: f64,
    pub classification: ScanClass,
    pub evidence: ScanEvidence,
    /// `high` for the topological obstruction, `low` for timeouts and sampling.
    pub confidence: &'static str,
    /// First launch `(theta, b)` that timed out.
    pub witness: Option<[[f64; 3]; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyScanReport {
    pub energies: Vec<f64>,
    pub entries: Vec<EnergyScanEntry>,
}

fn launches(dim: usize, plan: &SamplePlan, spread: f64, seed: u64) -> Vec<(Vec3, Vec3)> {
    let mut out = Vec::new();
    let m = plan.impacts.max(1);
    for theta in directions(dim, plan.directions) {
        let j = if dim == 2 { rot90(&theta) } else { any_orthogonal(&theta) };
        for i in 0..m {
            let s = if m == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (m - 1) as f64 };
            out.push((theta, j * (s * spread)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..plan.monte_carlo {
        let theta = if dim == 2 {
            unit_at(rng.random_range(0.0..std::f64::consts::TAU))
        } else {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let rho = (1.0 - z * z).sqrt();
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        };
        let b = if dim == 2 {
            rot90(&theta) * rng.random_range(-spread..spread)
        } else {
            let j = any_orthogonal(&theta);
            let k = theta.cross(&j);
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = spread * rng.random::<f64>().sqrt();
            (j * a.cos() + k * a.sin()) * r
        };
        out.push((theta, b));
    }
    out
}

fn scan_energy(model: &PotentialModel, energy: f64, plan: &SamplePlan, index: u64) -> Result<EnergyScanEntry> {
    let hill = if model.dimension() == 2 {
        hill_analysis(model, energy, plan.hill_resolution).ok().map(|h| h.classification)
    } else {
        None
    };
    let mut entry = EnergyScanEntry {
        energy,
        hill,
        launches: 0,
        timeouts: 0,
        failures: 0,
        fraction_timed_out: 0.0,
        max_flight_time: 0.0,
        classification: ScanClass::TrappingDetected,
        evidence: ScanEvidence::HillMultiComponent,
        confidence: "high",
        witness: None,
    };
    if hill == Some(HillClass::MultiComponent) {
        return Ok(entry);
    }
    let scatterer = Scatterer::new(model, energy, &plan.scatter)?;
    let starts = launches(model.dimension(), plan, scatterer.r_vir(), plan.seed.wrapping_add(index));
    let records: Vec<_> = starts.par_iter().map(|(theta, b)| scatterer.record(theta, b)).collect::<Result<_>>()?;
    entry.launches = records.len();
    for r in &records {
        match r.status {
            ScatterStatus::TrappedTimeout => {
                entry.timeouts += 1;
                if entry.witness.is_none() {
                    entry.witness = Some([r.theta_in.into(), r.b_in.into()]);
                }
            }
            ScatterStatus::Failed => entry.failures += 1,
            _ => {}
        }
        if r.diagnostics.flight_time.is_finite() {
            entry.max_flight_time = entry.max_flight_time.max(r.diagnostics.flight_time);
        }
    }
    entry.fraction_timed_out = entry.timeouts as f64 / entry.launches.max(1) as f64;
    entry.confidence = "low";
    (entry.classification, entry.evidence) = if entry.timeouts > 0 {
        (ScanClass::TrappingDetected, ScanEvidence::Timeout)
    } else if entry.failures > 0 {
        (ScanClass::Inconclusive, ScanEvidence::Failures)
    } else {
        (ScanClass::NontrappingEvidence, ScanEvidence::AllEscaped)
    };
    Ok(entry)
}

pub fn trapping_scan(model: &PotentialModel, energies: &[f64], plan: &SamplePlan) -> Result<EnergyScanReport> {
    if let Some(bad) = energies.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidConfig(format!("scan energies must be positive, got {bad}")));
    }
    let entries =
        energies.iter().enumerate().map(|(i, &e)| scan_energy(model, e, plan, i as u64)).collect::<Result<_>>()?;
    Ok(EnergyScanReport { energies: energies.to_vec(), entries })
}
