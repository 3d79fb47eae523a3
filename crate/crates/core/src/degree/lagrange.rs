//! Signed preimage count of the Lagrange projection `(t, b) -> q(t, b)`: the
//! position at asymptotic time `t` of the orbit with incoming impact parameter
//! `b rot90(theta)`.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{DegreeEstimate, DegreeMethod};
use crate::dynamics::{integrate_auto, IntegratorConfig, PhaseState, StopCondition, Trajectory};
use crate::geometry::{planar, rot90, signed_angle};
use crate::potential::PotentialModel;
use crate::scattering::{ScatterOptions, Scatterer};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
pub struct LagrangeOptions {
    pub t_cells: usize,
    pub b_cells: usize,
    /// Maximum number of quadtree splits of a grid cell.
    pub max_depth: usize,
    pub root_budget: usize,
    /// Re-draws of the target point after a singular Jacobian.
    pub retries: usize,
    /// Radius of the target re-draws.
    pub jitter: f64,
    pub seed: u64,
    pub scatter: ScatterOptions,
}

impl Default for LagrangeOptions {
    fn default() -> Self {
        Self {
            t_cells: 48,
            b_cells: 48,
            max_depth: 8,
            root_budget: 64,
            retries: 5,
            jitter: 1e-3,
            seed: 0,
            scatter: ScatterOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preimage {
    pub t: f64,
    pub b: f64,
    pub sign: i32,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagrangeProjection {
    pub theta: [f64; 2],
    pub t_range: [f64; 2],
    pub b_range: [f64; 2],
    pub target: [f64; 2],
    pub preimages: Vec<Preimage>,
    /// Signed count of preimages.
    pub projection_degree: i64,
    pub cells: usize,
    pub trajectories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagrangeResult {
    pub estimate: DegreeEstimate,
    pub projection: LagrangeProjection,
}

/// Orbits of the incoming Lagrange manifold, cached by impact parameter.
struct Fan<'a> {
    scatterer: Scatterer<'a>,
    theta: Vec3,
    k: f64,
    t_end: f64,
    integrator: IntegratorConfig,
    cache: HashMap<u64, Arc<(f64, Trajectory)>>,
}

impl<'a> Fan<'a> {
    fn compute(&self, b: f64) -> Result<(f64, Trajectory)> {
        let x0 = self.scatterer.launch_state(&self.theta, &(rot90(&self.theta) * b))?;
        // Asymptotic time of the launch point on its incoming line.
        let tau0 = x0.q.dot(&self.theta) / self.k;
        let traj =
            integrate_auto(self.scatterer.model(), &x0, &StopCondition::until(self.t_end - tau0), &self.integrator)?;
        Ok((tau0, traj))
    }

    fn ensure(&mut self, bs: &[f64]) -> Result<()> {
        let mut missing: Vec<f64> = bs.iter().copied().filter(|b| !self.cache.contains_key(&b.to_bits())).collect();
        missing.sort_by(f64::total_cmp);
        missing.dedup();
        let fresh: Vec<(f64, (f64, Trajectory))> =
            missing.par_iter().map(|&b| self.compute(b).map(|r| (b, r))).collect::<Result<_>>()?;
        for (b, r) in fresh {
            self.cache.insert(b.to_bits(), Arc::new(r));
        }
        Ok(())
    }

    fn state(&mut self, t: f64, b: f64) -> Result<PhaseState> {
        self.ensure(&[b])?;
        let entry = &self.cache[&b.to_bits()];
        let (tau0, traj) = (&entry.0, &entry.1);
        traj.state_at(t - tau0).ok_or_else(|| {
            Error::InvalidConfig(format!("time {t} outside the computed orbit (offset {tau0}, end {})", traj.last().t))
        })
    }

    fn pos(&mut self, t: f64, b: f64) -> Result<Vec3> {
        Ok(self.state(t, b)?.q)
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    t0: f64,
    t1: f64,
    b0: f64,
    b1: f64,
    depth: usize,
}

enum Verdict {
    Split,
    Leaf(f64),
}

fn judge(fan: &mut Fan, c: &Cell, target: &Vec3, max_depth: usize) -> Result<Verdict> {
    let corners = [(c.t0, c.b0), (c.t1, c.b0), (c.t1, c.b1), (c.t0, c.b1)];
    let mut v = [Vec3::zeros(); 4];
    for (i, &(t, b)) in corners.iter().enumerate() {
        v[i] = fan.pos(t, b)? - target;
    }
    let turn: Vec<f64> = (0..4).map(|i| signed_angle(&v[i], &v[(i + 1) % 4])).collect();
    let spread = (0..4).map(|i| (v[i] - v[(i + 1) % 4]).norm()).fold(0.0, f64::max);
    let nearest = v.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
    let coarse = turn.iter().any(|a| a.abs() > std::f64::consts::FRAC_PI_2) || nearest < 2.0 * spread;
    if coarse && c.depth < max_depth {
        return Ok(Verdict::Split);
    }
    Ok(Verdict::Leaf(turn.iter().sum::<f64>() / std::f64::consts::TAU))
}

fn polish(fan: &mut Fan, c: &Cell, target: &Vec3) -> Result<Option<Preimage>> {
    let (mut t, mut b) = (0.5 * (c.t0 + c.t1), 0.5 * (c.b0 + c.b1));
    let width = (c.b1 - c.b0).max(c.t1 - c.t0);
    for _ in 0..40 {
        let x = fan.state(t, b)?;
        let f = x.q - target;
        let h = 1e-6 * (1.0 + b.abs());
        let db = (fan.pos(t, b + h)? - fan.pos(t, b - h)?) / (2.0 * h);
        let det = x.p.x * db.y - x.p.y * db.x;
        if det.abs() <= 1e-9 * x.p.norm() * db.norm().max(1e-300) {
            return Err(Error::SingularJacobian { retries: 0 });
        }
        if f.norm() <= 1e-8 {
            return Ok(Some(Preimage { t, b, sign: det.signum() as i32, residual: f.norm() }));
        }
        // Solve [p db] (dt, dbb) = -f.
        let dt = -(f.x * db.y - f.y * db.x) / det;
        let dbb = -(x.p.x * f.y - x.p.y * f.x) / det;
        t += dt;
        b += dbb;
        if (t - 0.5 * (c.t0 + c.t1)).abs() > 4.0 * width || (b - 0.5 * (c.b0 + c.b1)).abs() > 4.0 * width {
            return Ok(None);
        }
    }
    Ok(None)
}

fn count(scatterer: &Scatterer, theta: &Vec3, target: &Vec3, opts: &LagrangeOptions) -> Result<LagrangeProjection> {
    let energy = scatterer.energy();
    let k = (2.0 * energy).sqrt();
    let r_vir = scatterer.r_vir();
    let reach = target.norm() + r_vir;
    let b_max = 2.0 * reach;
    let t_lo = -(reach + r_vir) / k;
    let mut t_hi = 3.0 * (reach + r_vir) / k;

    // Extend the time window until every orbit has left the target region for good.
    let b_grid: Vec<f64> = (0..=opts.b_cells).map(|j| -b_max + 2.0 * b_max * j as f64 / opts.b_cells as f64).collect();
    let mut fan = loop {
        let mut fan = Fan {
            scatterer: scatterer.clone(),
            theta: *theta,
            k,
            t_end: t_hi,
            integrator: IntegratorConfig { keep_dense: true, ..opts.scatter.integrator },
            cache: HashMap::new(),
        };
        fan.ensure(&b_grid)?;
        let mut gone = true;
        for &b in &b_grid {
            let x = fan.state(t_hi, b)?;
            if x.q.norm() < reach + r_vir || x.q.dot(&x.p) < 0.0 {
                gone = false;
                break;
            }
        }
        if gone {
            break fan;
        }
        t_hi *= 2.0;
        if t_hi > 1e3 * (reach + r_vir) / k {
            return Err(Error::TrappingDetected { energy });
        }
    };

    let t_grid: Vec<f64> = (0..=opts.t_cells).map(|i| t_lo + (t_hi - t_lo) * i as f64 / opts.t_cells as f64).collect();
    let mut work: Vec<Cell> = Vec::new();
    for j in 0..opts.b_cells {
        for i in 0..opts.t_cells {
            work.push(Cell { t0: t_grid[i], t1: t_grid[i + 1], b0: b_grid[j], b1: b_grid[j + 1], depth: 0 });
        }
    }
    let mut leaves: Vec<(Cell, f64)> = Vec::new();
    let mut cells = 0;
    while !work.is_empty() {
        let edges: Vec<f64> = work.iter().flat_map(|c| [c.b0, c.b1]).collect();
        fan.ensure(&edges)?;
        let mut next = Vec::new();
        let mut need = Vec::new();
        for c in &work {
            cells += 1;
            match judge(&mut fan, c, target, opts.max_depth)? {
                Verdict::Leaf(w) => leaves.push((*c, w)),
                Verdict::Split => {
                    let tm = 0.5 * (c.t0 + c.t1);
                    let bm = 0.5 * (c.b0 + c.b1);
                    let d = c.depth + 1;
                    next.push(Cell { t0: c.t0, t1: tm, b0: c.b0, b1: bm, depth: d });
                    next.push(Cell { t0: tm, t1: c.t1, b0: c.b0, b1: bm, depth: d });
                    next.push(Cell { t0: c.t0, t1: tm, b0: bm, b1: c.b1, depth: d });
                    next.push(Cell { t0: tm, t1: c.t1, b0: bm, b1: c.b1, depth: d });
                    need.push(bm);
                }
            }
        }
        fan.ensure(&need)?;
        work = next;
    }

    let hits: Vec<&(Cell, f64)> = leaves.iter().filter(|(_, w)| w.round() != 0.0).collect();
    if hits.len() > opts.root_budget {
        return Err(Error::RootBudgetExceeded { budget: opts.root_budget });
    }
    let mut preimages = Vec::new();
    let mut degree = 0i64;
    for (c, w) in hits {
        let w = w.round() as i64;
        degree += w;
        match polish(&mut fan, c, target)? {
            Some(p) if w.abs() == 1 && p.sign as i64 != w => {
                return Err(Error::SingularJacobian { retries: 0 });
            }
            Some(p) => preimages.push(p),
            None => return Err(Error::SingularJacobian { retries: 0 }),
        }
    }
    Ok(LagrangeProjection {
        theta: [theta.x, theta.y],
        t_range: [t_lo, t_hi],
        b_range: [-b_max, b_max],
        target: [target.x, target.y],
        preimages,
        projection_degree: degree,
        cells,
        trajectories: fan.cache.len(),
    })
}

pub fn lagrange_degree(model: &PotentialModel, energy: f64, theta: &Vec3, target: &Vec3) -> Result<LagrangeResult> {
    lagrange_degree_with(model, energy, theta, target, &LagrangeOptions::default())
}

/// `1 - deg(projection)`, with the target re-drawn nearby when a preimage is degenerate.
pub fn lagrange_degree_with(
    model: &PotentialModel,
    energy: f64,
    theta: &Vec3,
    target: &Vec3,
    opts: &LagrangeOptions,
) -> Result<LagrangeResult> {
    if model.dimension() != 2 {
        return Err(Error::InvalidConfig("Lagrange projection degree is planar".into()));
    }
    if model.value(target)? >= energy {
        return Err(Error::InvalidConfig("target point lies in the forbidden region".into()));
    }
    let probe = Scatterer::new(model, energy, &opts.scatter)?;
    let needed = 1.5 * (target.norm() + 3.0 * probe.r_vir()) / probe.r_vir();
    let scatter = ScatterOptions { launch_factor: opts.scatter.launch_factor.max(needed), ..opts.scatter.clone() };
    let scatterer = Scatterer::new(model, energy, &scatter)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut point = *target;
    for attempt in 0..=opts.retries {
        match count(&scatterer, theta, &point, opts) {
            Ok(projection) => {
                let raw = 1.0 - projection.projection_degree as f64;
                let estimate = DegreeEstimate::from_raw(
                    energy,
                    DegreeMethod::LagrangeProjection,
                    raw,
                    theta,
                    2,
                    opts.max_depth,
                    projection.cells,
                );
                return Ok(LagrangeResult { estimate, projection });
            }
            Err(Error::SingularJacobian { .. }) if attempt < opts.retries => {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                point = target + planar(a.cos(), a.sin()) * opts.jitter * (1.0 + target.norm());
            }
            Err(Error::SingularJacobian { .. }) => return Err(Error::SingularJacobian { retries: opts.retries }),
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop returns on the last attempt")
}
