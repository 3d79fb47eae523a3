//! Scattering experiments: asymptotic launch, integration to escape, and the
//! outgoing data `(direction, impact parameter)`.

mod asymptote;
mod map;
mod sweep;
mod trapping;

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::{
    integrate_auto, EventKind, IntegratorConfig, Outcome, PhaseState, StopCondition, Trajectory, Watch,
};
use crate::geometry::rot90;
#[cfg(test)]
use crate::potential::HillClass;
use crate::potential::{virial_radius_with, PotentialModel, VirialData, VirialOptions};
use crate::{Error, Result, Vec3};

pub(crate) use asymptote::perp;
pub(crate) use map::chart_map;
pub use map::{final_direction_map, final_direction_map_chart, DirectionMap, MapOptions, MapPoint};
pub use sweep::write_sweep_csv;
pub use trapping::{trapping_scan, EnergyScanEntry, EnergyScanReport, SamplePlan, ScanClass, ScanEvidence};

#[derive(Debug, Clone)]
pub struct ScatterOptions {
    /// Launch distance in units of the virial radius.
    pub launch_factor: f64,
    /// Extraction distance in units of the virial radius.
    pub extract_factor: f64,
    /// Timeout in units of `r_vir / sqrt(2E)`, on top of the approach time.
    pub time_factor: f64,
    pub integrator: IntegratorConfig,
    pub virial: VirialOptions,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self {
            launch_factor: 10.0,
            extract_factor: 10.0,
            time_factor: 1e3,
            integrator: IntegratorConfig::default(),
            virial: VirialOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterStatus {
    Scattered,
    TrappedTimeout,
    CollisionRegularized,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterDiagnostics {
    pub min_radius: f64,
    pub pericentre_count: usize,
    pub collisions: usize,
    pub flight_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRecord {
    pub energy: f64,
    pub theta_in: Vec3,
    pub b_in: Vec3,
    pub theta_out: Vec3,
    pub b_out: Vec3,
    pub status: ScatterStatus,
    pub diagnostics: ScatterDiagnostics,
}

impl ScatterRecord {
    /// Signed deflection angle in the plane.
    pub fn deflection(&self) -> f64 {
        crate::geometry::signed_angle(&self.theta_in, &self.theta_out)
    }

    /// Impact parameters as signed lengths along `rot90(direction)` (planar).
    pub fn b_in_scalar(&self) -> f64 {
        self.b_in.dot(&rot90(&self.theta_in))
    }

    pub fn b_out_scalar(&self) -> f64 {
        self.b_out.dot(&rot90(&self.theta_out))
    }

    pub fn is_usable(&self) -> bool {
        matches!(self.status, ScatterStatus::Scattered | ScatterStatus::CollisionRegularized)
    }
}

impl Serialize for ScatterRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ScatterRecord", 7)?;
        st.serialize_field("E", &self.energy)?;
        st.serialize_field("theta_in", self.theta_in.as_slice())?;
        st.serialize_field("b_in", self.b_in.as_slice())?;
        st.serialize_field("theta_out", self.theta_out.as_slice())?;
        st.serialize_field("b_out", self.b_out.as_slice())?;
        st.serialize_field("status", &self.status)?;
        st.serialize_field("diagnostics", &self.diagnostics)?;
        st.end()
    }
}

/// Scattering context at one energy.
#[derive(Debug, Clone)]
pub struct Scatterer<'a> {
    model: &'a PotentialModel,
    energy: f64,
    tail: asymptote::Tail,
    virial: VirialData,
    opts: ScatterOptions,
}

impl<'a> Scatterer<'a> {
    pub fn new(model: &'a PotentialModel, energy: f64, opts: &ScatterOptions) -> Result<Self> {
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(Error::InvalidConfig(format!("scattering energy must be positive, got {energy}")));
        }
        let virial = virial_radius_with(model, energy, &opts.virial)?;
        Ok(Self { model, energy, tail: asymptote::Tail::of(model), virial, opts: opts.clone() })
    }

    pub fn model(&self) -> &PotentialModel {
        self.model
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn r_vir(&self) -> f64 {
        self.virial.radius
    }

    pub fn r_extract(&self) -> f64 {
        self.opts.extract_factor * self.virial.radius
    }

    /// Whether outgoing data are matched to an exact long-range tail.
    pub fn exact_tail(&self) -> bool {
        self.tail.is_exact()
    }

    fn check_input(&self, theta: &Vec3, b: &Vec3) -> Result<()> {
        let d = self.model.dimension();
        if (theta.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("incoming direction must be a unit vector".into()));
        }
        if theta.dot(b).abs() > 1e-9 * (1.0 + b.norm()) {
            return Err(Error::InvalidConfig("impact parameter must be orthogonal to the direction".into()));
        }
        if d == 2 && (theta.z != 0.0 || b.z != 0.0) {
            return Err(Error::InvalidConfig("planar model needs planar direction and impact parameter".into()));
        }
        Ok(())
    }

    pub fn launch_state(&self, theta: &Vec3, b: &Vec3) -> Result<PhaseState> {
        self.check_input(theta, b)?;
        let b = perp(b, theta);
        let radius = self.opts.launch_factor * self.virial.radius;
        let x0 = asymptote::launch(self.model, &self.tail, self.energy, theta, &b, radius)?;
        if x0.q.norm() < self.virial.radius {
            return Err(Error::LaunchInsideInteractionZone { radius: x0.q.norm(), r_vir: self.virial.radius });
        }
        Ok(x0)
    }

    /// Incoming asymptotic data of a state, as reconstructed from the tail.
    pub fn incoming_asymptote(&self, x: &PhaseState) -> Result<(Vec3, Vec3)> {
        asymptote::incoming(&self.tail, self.energy, x)
    }

    pub fn outgoing_asymptote(&self, x: &PhaseState) -> Result<(Vec3, Vec3)> {
        asymptote::outgoing(&self.tail, self.energy, x)
    }

    /// Orbit from the incoming asymptote `(theta, b)` to extraction or timeout,
    /// with extra watched centers.
    pub fn trajectory(&self, theta: &Vec3, b: &Vec3, watches: &[Watch]) -> Result<Trajectory> {
        let x0 = self.launch_state(theta, b)?;
        let k = (2.0 * self.energy).sqrt();
        let r_vir = self.virial.radius;
        let t_max = self.opts.time_factor * r_vir / k + 2.0 * x0.q.norm() / k;
        let mut stop = StopCondition::escape(r_vir, self.r_extract(), t_max);
        stop.watches = watches.to_vec();
        integrate_auto(self.model, &x0, &stop, &self.opts.integrator)
    }

    pub fn scatter(&self, theta: &Vec3, b: &Vec3) -> Result<ScatterRecord> {
        let traj = self.trajectory(theta, b, &[Watch { center: Vec3::zeros(), radius: None }])?;
        let last = traj.last();
        let collisions = traj.collisions();
        let diagnostics = ScatterDiagnostics {
            min_radius: if collisions > 0 { 0.0 } else { traj.min_radius() },
            pericentre_count: traj
                .events
                .iter()
                .filter(|e| matches!(e.kind, EventKind::Pericentre { center: 0, .. }))
                .count(),
            collisions,
            flight_time: last.t,
            error: None,
        };
        let (theta_out, b_out, status) = match traj.outcome {
            Outcome::Escaped => {
                let (dir, b_out) = self.outgoing_asymptote(last)?;
                let status =
                    if collisions > 0 { ScatterStatus::CollisionRegularized } else { ScatterStatus::Scattered };
                (dir, b_out, status)
            }
            Outcome::Timeout => {
                let dir = last.p.normalize();
                (dir, perp(&last.q, &dir), ScatterStatus::TrappedTimeout)
            }
        };
        let theta_out = theta_out.normalize();
        Ok(ScatterRecord {
            energy: self.energy,
            theta_in: *theta,
            b_in: perp(b, theta),
            b_out: perp(&b_out, &theta_out),
            theta_out,
            status,
            diagnostics,
        })
    }

    /// Like [`Scatterer::scatter`], but integration failures become `failed` records.
    pub fn record(&self, theta: &Vec3, b: &Vec3) -> Result<ScatterRecord> {
        match self.scatter(theta, b) {
            Ok(r) => Ok(r),
            Err(e) if e.is_validation() => Err(e),
            Err(e) => Ok(ScatterRecord {
                energy: self.energy,
                theta_in: *theta,
                b_in: perp(b, theta),
                theta_out: *theta,
                b_out: perp(b, theta),
                status: ScatterStatus::Failed,
                diagnostics: ScatterDiagnostics {
                    min_radius: f64::NAN,
                    pericentre_count: 0,
                    collisions: 0,
                    flight_time: f64::NAN,
                    error: Some(e.to_string()),
                },
            }),
        }
    }
}

pub fn launch_state(model: &PotentialModel, energy: f64, theta: &Vec3, b: &Vec3) -> Result<PhaseState> {
    Scatterer::new(model, energy, &ScatterOptions::default())?.launch_state(theta, b)
}

pub fn scatter_one(model: &PotentialModel, energy: f64, theta: &Vec3, b: &Vec3) -> Result<ScatterRecord> {
    Scatterer::new(model, energy, &ScatterOptions::default())?.scatter(theta, b)
}

/// Chart of the compactified impact line: `u in (-1, 1) -> tan(u pi / 2)`.
pub fn chart_b(u: f64) -> f64 {
    (0.5 * PI * u).tan()
}

pub fn chart_u(b: f64) -> f64 {
    2.0 / PI * b.atan()
}
