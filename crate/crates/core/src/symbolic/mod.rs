//! Finite itineraries of multi-center scattering, realized by nested bisection
//! on the impact parameter.
//!
//! Centers are numbered from 1 in itineraries and visit logs, following the
//! order of the model terms.

mod realize;
mod shadow;

use serde::Serialize;

use crate::dynamics::{EventKind, Trajectory, Watch};
use crate::potential::{PotentialModel, TermKind};
use crate::{Error, Result, Vec3};

pub use realize::{realize_itinerary, realize_many, ItineraryWitness, RealizeOptions};
pub use shadow::{check_nonshadowing, ShadowingCheck};

/// Disk standing in for the support of one term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support {
    #[serde(serialize_with = "planar_xy")]
    pub center: Vec3,
    pub radius: f64,
}

fn planar_xy<S: serde::Serializer>(v: &Vec3, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&[v.x, v.y], s)
}

/// Effective supports: `3 sigma` for Gaussians, the exact radius for polynomial
/// bumps, and the radius where `|V| = E/100` for singular terms.
pub fn effective_supports(model: &PotentialModel, energy: f64) -> Vec<Support> {
    model
        .terms()
        .iter()
        .map(|t| Support {
            center: t.center,
            radius: match t.kind {
                TermKind::Gaussian { sigma, .. } => 3.0 * sigma,
                TermKind::PolyBump { radius, .. } => radius,
                TermKind::Singular { strength, exponent } => (100.0 * strength / energy).powf(1.0 / exponent),
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Itinerary {
    symbols: Vec<usize>,
    centers: usize,
}

impl Itinerary {
    /// Word over `1..=centers` without repeated neighbours.
    pub fn new(symbols: Vec<usize>, centers: usize) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidConfig("empty itinerary".into()));
        }
        if let Some(s) = symbols.iter().find(|&&s| s == 0 || s > centers) {
            return Err(Error::InvalidConfig(format!("symbol {s} outside 1..={centers}")));
        }
        if let Some(w) = symbols.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!("symbol {} repeated in a row", w[0])));
        }
        Ok(Self { symbols, centers })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn centers(&self) -> usize {
        self.centers
    }

    /// All admissible words of length `len`, in lexicographic order.
    pub fn all_words(centers: usize, len: usize) -> Vec<Itinerary> {
        let mut words: Vec<Vec<usize>> = (1..=centers).map(|s| vec![s]).collect();
        for _ in 1..len {
            words = words
                .into_iter()
                .flat_map(|w| {
                    let last = *w.last().unwrap();
                    (1..=centers).filter(move |&s| s != last).map(move |s| {
                        let mut next = w.clone();
                        next.push(s);
                        next
                    })
                })
                .collect();
        }
        words.into_iter().map(|symbols| Itinerary { symbols, centers }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Visit {
    pub center: usize,
    pub distance: f64,
    pub time: f64,
}

/// Watches reporting closest approaches to, and exits from, every support.
pub fn support_watches(supports: &[Support]) -> Vec<Watch> {
    supports.iter().map(|s| Watch { center: s.center, radius: Some(s.radius) }).collect()
}

/// Closest approaches that fall inside a support disk, in time order, with
/// consecutive visits to one center merged. The trajectory must have been
/// integrated with [`support_watches`].
pub fn visit_log(traj: &Trajectory, supports: &[Support]) -> Vec<Visit> {
    let index_of = |w: usize| -> Option<usize> {
        let c = traj.watch_centers.get(w)?;
        supports.iter().position(|s| (s.center - c).norm() <= 1e-12 * (1.0 + c.norm()))
    };
    let mut log: Vec<Visit> = Vec::new();
    for e in &traj.events {
        let (i, distance) = match e.kind {
            EventKind::Pericentre { center, distance, .. } => match index_of(center) {
                Some(i) => (i, distance),
                None => continue,
            },
            EventKind::Collision { .. } => {
                match supports.iter().position(|s| (s.center - e.state.q).norm() <= s.radius) {
                    Some(i) => (i, 0.0),
                    None => continue,
                }
            }
            _ => continue,
        };
        if distance > supports[i].radius {
            continue;
        }
        let visit = Visit { center: i + 1, distance, time: e.t };
        match log.last_mut() {
            Some(last) if last.center == visit.center => {
                if visit.distance < last.distance {
                    *last = visit;
                }
            }
            _ => log.push(visit),
        }
    }
    log
}

#[cfg(test)]
mod tests;
