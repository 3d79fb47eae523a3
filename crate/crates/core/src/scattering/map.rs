//! Final-direction map along a path of impact parameters, refined until the
//! outgoing direction moves by at most `max_gap` between neighbours.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{chart_b, ScatterOptions, ScatterRecord, Scatterer};
use crate::geometry::{angle_between, rot90};
use crate::potential::PotentialModel;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
pub struct MapOptions {
    pub max_gap: f64,
    pub max_samples: usize,
    /// Intervals narrower than this in the path parameter are not split further.
    pub min_width: f64,
    pub scatter: ScatterOptions,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self { max_gap: PI / 8.0, max_samples: 20_000, min_width: 1e-13, scatter: ScatterOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MapPoint {
    /// Path parameter (chart coordinate `u`, or fractional grid index).
    pub param: f64,
    #[serde(serialize_with = "as_slice")]
    pub theta_out: Vec3,
    /// `None` at the compactification points, where the map equals the incoming direction.
    pub record: Option<ScatterRecord>,
}

fn as_slice<S: serde::Serializer>(v: &Vec3, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(v.as_slice(), s)
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionMap {
    pub energy: f64,
    #[serde(serialize_with = "as_slice")]
    pub theta: Vec3,
    pub points: Vec<MapPoint>,
    /// False when the sample budget ran out before every gap was closed.
    pub complete: bool,
    pub max_gap: f64,
    /// Parameters of intervals that stayed too wide at the minimum width.
    pub stalled: Vec<f64>,
}

impl DirectionMap {
    pub fn records(&self) -> impl Iterator<Item = &ScatterRecord> {
        self.points.iter().filter_map(|p| p.record.as_ref())
    }

    pub fn largest_gap(&self) -> f64 {
        self.points.windows(2).map(|w| angle_between(&w[0].theta_out, &w[1].theta_out)).fold(0.0, f64::max)
    }

    /// Turn budget exhaustion into an error.
    pub fn require_complete(self) -> Result<Self> {
        if self.complete {
            Ok(self)
        } else {
            Err(Error::RefinementBudgetExceeded { samples: self.points.len() })
        }
    }
}

/// Refine `param -> b` from the initial parameters. `None` marks a point at infinity.
pub(crate) fn refine_path<F>(
    scatterer: &Scatterer,
    theta: &Vec3,
    path: F,
    initial: &[f64],
    opts: &MapOptions,
) -> Result<DirectionMap>
where
    F: Fn(f64) -> Option<Vec3> + Sync,
{
    let eval = |params: &[f64]| -> Result<Vec<MapPoint>> {
        params
            .par_iter()
            .map(|&s| match path(s) {
                None => Ok(MapPoint { param: s, theta_out: *theta, record: None }),
                Some(b) => {
                    let r = scatterer.record(theta, &b)?;
                    Ok(MapPoint { param: s, theta_out: r.theta_out, record: Some(r) })
                }
            })
            .collect()
    };
    let mut init = initial.to_vec();
    init.sort_by(f64::total_cmp);
    init.dedup();
    let mut points = eval(&init)?;
    let mut complete = true;
    let mut stalled = Vec::new();
    loop {
        let mut split = Vec::new();
        stalled.clear();
        for w in points.windows(2) {
            if angle_between(&w[0].theta_out, &w[1].theta_out) > opts.max_gap {
                let mid = 0.5 * (w[0].param + w[1].param);
                if w[1].param - w[0].param > opts.min_width && mid > w[0].param && mid < w[1].param {
                    split.push(mid);
                } else {
                    stalled.push(mid);
                }
            }
        }
        if split.is_empty() {
            break;
        }
        if points.len() + split.len() > opts.max_samples {
            complete = false;
            break;
        }
        let fresh = eval(&split)?;
        points.extend(fresh);
        points.sort_by(|a, b| a.param.total_cmp(&b.param));
    }
    Ok(DirectionMap { energy: scatterer.energy(), theta: *theta, points, complete, max_gap: opts.max_gap, stalled })
}

/// Outgoing directions along the polygonal path through `b_grid`.
pub fn final_direction_map(
    model: &PotentialModel,
    energy: f64,
    theta: &Vec3,
    b_grid: &[Vec3],
    opts: &MapOptions,
) -> Result<DirectionMap> {
    if b_grid.is_empty() {
        return Err(Error::InvalidConfig("empty impact-parameter grid".into()));
    }
    let scatterer = Scatterer::new(model, energy, &opts.scatter)?;
    let n = b_grid.len();
    let path = |s: f64| {
        let i = (s.floor() as usize).min(n - 1);
        let j = (i + 1).min(n - 1);
        let f = s - i as f64;
        Some(b_grid[i] * (1.0 - f) + b_grid[j] * f)
    };
    let init: Vec<f64> = (0..n).map(|i| i as f64).collect();
    refine_path(&scatterer, theta, path, &init, opts)
}

/// Planar map on the compactified line `b = tan(u pi/2) rot90(theta)`, `u in [-1, 1]`,
/// starting from `samples + 1` equally spaced values of `u`.
pub fn final_direction_map_chart(
    model: &PotentialModel,
    energy: f64,
    theta: &Vec3,
    samples: usize,
    opts: &MapOptions,
) -> Result<DirectionMap> {
    if model.dimension() != 2 {
        return Err(Error::InvalidConfig("the compactified line chart is planar".into()));
    }
    let scatterer = Scatterer::new(model, energy, &opts.scatter)?;
    chart_map(&scatterer, theta, samples, opts)
}

pub(crate) fn chart_map(
    scatterer: &Scatterer,
    theta: &Vec3,
    samples: usize,
    opts: &MapOptions,
) -> Result<DirectionMap> {
    let j = rot90(theta);
    let path = |u: f64| (u.abs() < 1.0).then(|| j * chart_b(u));
    let samples = samples.max(2);
    let init: Vec<f64> = (0..=samples).map(|i| -1.0 + 2.0 * i as f64 / samples as f64).collect();
    refine_path(scatterer, theta, path, &init, opts)
}
