//! Hamiltonian flow of `H = |p|^2/2 + V(q)` with event detection, and its
//! regularization through collisions for exponents `alpha = 2n/(n+1)`.

mod dop853;
mod driver;
mod dump;

use rayon::prelude::*;
use serde::Serialize;

use crate::potential::{PotentialModel, TermKind};
use crate::{Error, Result, Vec3};

pub use dump::{events_json, write_trajectory_csv};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub q: Vec3,
    pub p: Vec3,
    pub t: f64,
}

impl PhaseState {
    pub fn new(q: Vec3, p: Vec3, t: f64) -> Self {
        Self { q, p, t }
    }

    pub fn energy(&self, model: &PotentialModel) -> Result<f64> {
        Ok(0.5 * self.p.norm_squared() + model.value(&self.q)?)
    }

    /// Angular momentum about `center`: signed scalar in the plane, norm in space.
    pub fn angular_momentum(&self, center: &Vec3) -> f64 {
        let l = (self.q - center).cross(&self.p);
        if l.x == 0.0 && l.y == 0.0 {
            l.z
        } else {
            l.norm()
        }
    }
}

impl Serialize for PhaseState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PhaseState", 3)?;
        st.serialize_field("t", &self.t)?;
        st.serialize_field("q", self.q.as_slice())?;
        st.serialize_field("p", self.p.as_slice())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Local minimum of the distance to a watched center.
    Pericentre {
        center: usize,
        distance: f64,
        angular_momentum: f64,
    },
    /// The orbit left the watch disk of a center.
    DiskExit {
        center: usize,
    },
    /// Exact collision continued by the reflection rule; the recorded state is
    /// the one entering the reflection.
    Collision {
        order: u32,
        angular_momentum: f64,
    },
    Escape,
    Extraction,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
    pub state: PhaseState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Escaped and reached the extraction radius.
    Escaped,
    /// Reached `t_max` first.
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeRule {
    pub r_vir: f64,
    pub r_extract: f64,
}

/// A point whose distance minima are reported; `radius` adds disk-exit events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Watch {
    pub center: Vec3,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopCondition {
    pub t_max: f64,
    pub escape: Option<EscapeRule>,
    pub watches: Vec<Watch>,
}

impl StopCondition {
    pub fn until(t_max: f64) -> Self {
        Self { t_max, escape: None, watches: Vec::new() }
    }

    pub fn escape(r_vir: f64, r_extract: f64, t_max: f64) -> Self {
        Self { t_max, escape: Some(EscapeRule { r_vir, r_extract }), watches: Vec::new() }
    }

    pub fn watching(mut self, watch: Watch) -> Self {
        self.watches.push(watch);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in physical time.
    pub h_max: f64,
    pub max_steps: usize,
    /// Allowed |H - E| relative to `1 + |E|`.
    pub energy_tol: f64,
    /// Reruns with ten times tighter tolerances after an energy failure.
    pub retries: usize,
    /// Keep dense output for `Trajectory::state_at`.
    pub keep_dense: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            energy_tol: 1e-8,
            retries: 2,
            keep_dense: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PericentreData {
    pub time: f64,
    pub distance: f64,
    /// Direction of `q - s` at closest approach. For collision orbits this is
    /// the limit of nearby orbits when `n` is odd and undefined otherwise.
    pub direction: Option<Vec3>,
    /// Direction of `p` at closest approach. For collision orbits this is the
    /// limit of nearby orbits when `n` is even and undefined otherwise.
    pub velocity_direction: Option<Vec3>,
    pub angular_momentum: f64,
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
enum Segment {
    Flow { dense: dop853::Dense, physical: bool, t0: f64, t1: f64 },
    Jump { t0: f64, t1: f64, before: PhaseState, after: PhaseState },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub energy: f64,
    pub states: Vec<PhaseState>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
    /// Centers of the watch list, in index order (the singular center is appended
    /// for regularized runs).
    pub watch_centers: Vec<Vec3>,
    pub max_energy_error: f64,
    pub steps: usize,
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn initial(&self) -> &PhaseState {
        &self.states[0]
    }

    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory has at least one state")
    }

    /// Smallest distance to the origin, including the closest point of each
    /// chord between stored states (exact for straight flight).
    pub fn min_radius(&self) -> f64 {
        let mut best = self.states.iter().map(|s| s.q.norm()).fold(f64::INFINITY, f64::min);
        for w in self.states.windows(2) {
            let d = w[1].q - w[0].q;
            let len2 = d.norm_squared();
            if len2 > 0.0 {
                let s = (-w[0].q.dot(&d) / len2).clamp(0.0, 1.0);
                best = best.min((w[0].q + d * s).norm());
            }
        }
        best
    }

    pub fn collisions(&self) -> usize {
        self.events.iter().filter(|e| matches!(e.kind, EventKind::Collision { .. })).count()
    }

    /// State at physical time `t` from dense output (requires `keep_dense`).
    /// Inside a reflected collision the nearer endpoint is returned.
    pub fn state_at(&self, t: f64) -> Option<PhaseState> {
        let end = self.segments.last()?.end();
        // Accept requests that overshoot the end by rounding only.
        let t = if t > end && t - end <= 1e-12 * (1.0 + end.abs()) { end } else { t };
        let idx = self.segments.partition_point(|s| s.end() < t);
        let seg = self.segments.get(idx)?;
        match seg {
            Segment::Jump { t0, t1, before, after } => Some(if t - t0 < t1 - t { *before } else { *after }),
            Segment::Flow { dense, physical, t0, t1 } => {
                if t < *t0 {
                    return None;
                }
                let s = if *physical { dense.s0 + (t - t0) } else { driver::solve_time(dense, t, *t0, *t1) };
                Some(driver::to_state(&dense.eval(s)))
            }
        }
    }

    /// First time the escape condition held, if ever.
    pub fn escape_time(&self) -> Option<f64> {
        self.events.iter().find(|e| e.kind == EventKind::Escape).map(|e| e.t)
    }
}

impl Segment {
    fn end(&self) -> f64 {
        match self {
            Segment::Flow { t1, .. } | Segment::Jump { t1, .. } => *t1,
        }
    }
}

/// Plain adaptive integration in physical time.
pub fn integrate(
    model: &PotentialModel,
    x0: &PhaseState,
    stop: &StopCondition,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    driver::run_with_retries(model, x0, stop, config, None)
}

/// Integration through collisions with the singular term, whose exponent must
/// be `2n/(n+1)`.
pub fn integrate_regularized(
    model: &PotentialModel,
    x0: &PhaseState,
    stop: &StopCondition,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let Some(index) = model.singular_index()? else {
        return integrate(model, x0, stop, config);
    };
    let term = model.terms()[index];
    let TermKind::Singular { strength, exponent } = term.kind else { unreachable!() };
    let order = regularization_order(exponent)?;
    let energy = x0.energy(model)?;
    let scale = if energy > 0.0 { (strength / energy).powf(1.0 / exponent).min(1.0) } else { 1.0 };
    let reg = driver::Regularization {
        center: term.center,
        strength,
        exponent,
        order,
        r_switch: 0.05 * scale,
        c_alpha: 0.5 * (2.0 + exponent),
    };
    driver::run_with_retries(model, x0, stop, config, Some(reg))
}

/// Integration with regularization whenever the model admits it.
pub fn integrate_auto(
    model: &PotentialModel,
    x0: &PhaseState,
    stop: &StopCondition,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    match model.singular_index() {
        Ok(Some(i)) => match model.terms()[i].kind {
            TermKind::Singular { exponent, .. } if regularization_order(exponent).is_ok() => {
                integrate_regularized(model, x0, stop, config)
            }
            _ => integrate(model, x0, stop, config),
        },
        _ => integrate(model, x0, stop, config),
    }
}

/// `n` with `alpha = 2n/(n+1)`.
pub fn regularization_order(alpha: f64) -> Result<u32> {
    let n = alpha / (2.0 - alpha);
    let rounded = n.round();
    if rounded >= 1.0 && (n - rounded).abs() < 1e-9 {
        Ok(rounded as u32)
    } else {
        Err(Error::NotRegularizable { alpha })
    }
}

/// Integrate many initial conditions in parallel; results keep input order.
pub fn integrate_many(
    model: &PotentialModel,
    starts: &[PhaseState],
    stop: &StopCondition,
    config: &IntegratorConfig,
) -> Vec<Result<Trajectory>> {
    starts.par_iter().map(|x| integrate_auto(model, x, stop, config)).collect()
}

/// Closest approach to `center`, or the collision limit for reflected orbits.
pub fn pericentre(traj: &Trajectory, center: &Vec3) -> Result<PericentreData> {
    let watch = traj.watch_centers.iter().position(|c| (c - center).norm() <= 1e-12 * (1.0 + center.norm()));
    for e in &traj.events {
        match e.kind {
            EventKind::Pericentre { center: c, distance, angular_momentum } if Some(c) == watch => {
                return Ok(PericentreData {
                    time: e.t,
                    distance,
                    direction: Some((e.state.q - center).normalize()),
                    velocity_direction: Some(e.state.p.normalize()),
                    angular_momentum: angular_momentum.abs(),
                });
            }
            EventKind::Collision { order, angular_momentum } => {
                let qhat = (e.state.q - center).normalize();
                let phat = e.state.p.normalize();
                let sign = |k: u32| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                let (direction, velocity_direction) = if order % 2 == 1 {
                    (Some(qhat * sign(order.div_ceil(2))), None)
                } else {
                    (None, Some(phat * sign(order / 2)))
                };
                return Ok(PericentreData {
                    time: e.t,
                    distance: 0.0,
                    direction,
                    velocity_direction,
                    angular_momentum: angular_momentum.abs(),
                });
            }
            _ => {}
        }
    }
    let energy = traj.energy;
    Err(Error::NoPericentre { energy, l: traj.initial().angular_momentum(center) })
}

#[cfg(test)]
mod tests;
