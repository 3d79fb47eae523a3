use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use super::{check_nonshadowing, effective_supports, support_watches, visit_log, Itinerary, Support, Visit};
use crate::degree::{degree_winding_with, WindingOptions};
use crate::dynamics::{EventKind, PhaseState, Watch};
use crate::geometry::{rot90, signed_angle};
use crate::potential::PotentialModel;
use crate::scattering::{ScatterOptions, Scatterer};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
pub struct RealizeOptions {
    pub theta: Vec3,
    /// Impact parameters in the first sweep.
    pub initial_samples: usize,
    /// Impact parameters per nested interval.
    pub samples: usize,
    /// Relative bracket width below which the search gives up.
    pub width_tol: f64,
    /// Half-width of the first sweep; defaults to just beyond the outermost support.
    pub b_range: Option<f64>,
    /// Require every single term to have nonzero degree at the energy.
    pub check_blocks: bool,
    /// Incoming directions to try, `theta` first and then successive
    /// golden-angle rotations of it. A direction parallel to the axis between
    /// two consecutive centers only reaches the second one by grazing orbits.
    pub directions: usize,
    pub scatter: ScatterOptions,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        Self {
            theta: Vec3::new(1.0, 0.0, 0.0),
            initial_samples: 1001,
            samples: 65,
            width_tol: 1e-14,
            b_range: None,
            check_blocks: true,
            directions: 6,
            scatter: ScatterOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItineraryWitness {
    #[serde(rename = "E")]
    pub energy: f64,
    pub theta: [f64; 2],
    pub itinerary: Vec<usize>,
    /// Impact parameter along `rot90(theta)`.
    pub b: f64,
    pub visit_log: Vec<Visit>,
    pub bracket_width: f64,
    /// Interval of impact parameters sharing the first `i + 1` symbols.
    pub intervals: Vec<[f64; 2]>,
    pub trajectories: usize,
}

#[derive(Debug, Clone)]
struct Probe {
    b: f64,
    symbols: Vec<usize>,
    log: Vec<Visit>,
    /// State on leaving the disk of each visit, if it left.
    exits: Vec<Option<PhaseState>>,
}

struct Search<'a> {
    scatterer: Scatterer<'a>,
    theta: Vec3,
    supports: Vec<Support>,
    watches: Vec<Watch>,
    word: Vec<usize>,
    opts: &'a RealizeOptions,
    runs: AtomicUsize,
    deepest: AtomicUsize,
    exhausted: Mutex<Option<(usize, f64)>>,
}

impl Search<'_> {
    fn probe(&self, b: f64) -> Result<Probe> {
        self.runs.fetch_add(1, Ordering::Relaxed);
        let traj = match self.scatterer.trajectory(&self.theta, &(rot90(&self.theta) * b), &self.watches) {
            Ok(t) => t,
            Err(e) if e.is_validation() => return Err(e),
            Err(_) => return Ok(Probe { b, symbols: Vec::new(), log: Vec::new(), exits: Vec::new() }),
        };
        let log = visit_log(&traj, &self.supports);
        let exits = log
            .iter()
            .map(|v| {
                traj.events.iter().find_map(|e| match e.kind {
                    EventKind::DiskExit { center }
                        if e.t > v.time && traj.watch_centers[center] == self.supports[v.center - 1].center =>
                    {
                        Some(e.state)
                    }
                    _ => None,
                })
            })
            .collect();
        Ok(Probe { b, symbols: log.iter().map(|v| v.center).collect(), log, exits })
    }

    fn probe_many(&self, bs: &[f64]) -> Result<Vec<Probe>> {
        bs.par_iter().map(|&b| self.probe(b)).collect()
    }

    fn has_prefix(&self, p: &Probe, len: usize) -> bool {
        p.symbols.len() >= len && p.symbols[..len] == self.word[..len]
    }

    /// Angle from the exit velocity after visit `len` to the next center.
    fn aim(&self, p: &Probe, len: usize) -> Option<f64> {
        if len == 0 || !self.has_prefix(p, len) {
            return None;
        }
        let x = p.exits[len - 1]?;
        let next = self.supports[self.word[len] - 1].center;
        Some(signed_angle(&x.p, &(next - x.q)))
    }

    fn too_narrow(&self, lo: f64, hi: f64) -> bool {
        hi - lo <= self.opts.width_tol * (1.0 + lo.abs().max(hi.abs()))
    }

    /// Boundary between `inside` (prefix holds) and `outside` (it does not).
    fn edge(&self, len: usize, mut inside: f64, mut outside: f64, tol: f64) -> Result<f64> {
        while (outside - inside).abs() > tol && !self.too_narrow(inside.min(outside), inside.max(outside)) {
            let mid = 0.5 * (inside + outside);
            if self.has_prefix(&self.probe(mid)?, len) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    }

    /// Points with prefix `len + 1` found by bisecting a sign change of the aim.
    fn aimed(&self, probes: &[Probe], len: usize) -> Result<Vec<(f64, f64, f64)>> {
        let mut found = Vec::new();
        for w in probes.windows(2) {
            let (Some(a0), Some(a1)) = (self.aim(&w[0], len), self.aim(&w[1], len)) else { continue };
            let half_pi = std::f64::consts::FRAC_PI_2;
            if a0.signum() == a1.signum() || a0.abs() >= half_pi || a1.abs() >= half_pi {
                continue;
            }
            let (mut lo, mut hi, mut s_lo) = (w[0].b, w[1].b, a0.signum());
            loop {
                if self.too_narrow(lo, hi) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let p = self.probe(mid)?;
                if self.has_prefix(&p, len + 1) {
                    found.push((lo, mid, hi));
                    break;
                }
                match self.aim(&p, len) {
                    Some(a) if a.signum() == s_lo => {
                        lo = mid;
                        s_lo = a.signum();
                    }
                    Some(_) => hi = mid,
                    None => break,
                }
            }
        }
        Ok(found)
    }

    fn search(&self, len: usize, lo: f64, hi: f64, intervals: &mut Vec<[f64; 2]>) -> Result<Option<ItineraryWitness>> {
        self.deepest.fetch_max(len, Ordering::Relaxed);
        let m = self.word.len();
        let n = if len == 0 { self.opts.initial_samples } else { self.opts.samples }.max(3);
        let bs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let probes = self.probe_many(&bs)?;
        if len == m {
            return self.finish(lo, hi, &probes, intervals);
        }
        // Runs of consecutive samples with the longer prefix, as (outer left, first, last, outer right).
        let mut runs: Vec<(f64, f64, f64, f64)> = Vec::new();
        let mut i = 0;
        while i < n {
            if !self.has_prefix(&probes[i], len + 1) {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < n && self.has_prefix(&probes[i + 1], len + 1) {
                i += 1;
            }
            let left = if start == 0 { lo } else { bs[start - 1] };
            let right = if i == n - 1 { hi } else { bs[i + 1] };
            runs.push((left, bs[start], bs[i], right));
            i += 1;
        }
        if runs.is_empty() {
            for (l, mid, r) in self.aimed(&probes, len)? {
                runs.push((l, mid, mid, r));
            }
        }
        let tol = (hi - lo) * 1e-7;
        for (left_out, first, last, right_out) in runs {
            let left = if left_out == first { first } else { self.edge(len + 1, first, left_out, tol)? };
            let right = if right_out == last { last } else { self.edge(len + 1, last, right_out, tol)? };
            if self.too_narrow(left, right) {
                let mut slot = self.exhausted.lock().expect("lock");
                if slot.is_none_or(|(l, _)| l < len + 1) {
                    *slot = Some((len + 1, right - left));
                }
                continue;
            }
            intervals.push([left, right]);
            if let Some(w) = self.search(len + 1, left, right, intervals)? {
                return Ok(Some(w));
            }
            intervals.pop();
        }
        Ok(None)
    }

    fn witness(&self, p: &Probe, width: f64, intervals: &[[f64; 2]]) -> ItineraryWitness {
        ItineraryWitness {
            energy: self.scatterer.energy(),
            theta: [self.theta.x, self.theta.y],
            itinerary: self.word.clone(),
            b: p.b,
            visit_log: p.log.clone(),
            bracket_width: width,
            intervals: intervals.to_vec(),
            trajectories: self.runs.load(Ordering::Relaxed),
        }
    }

    /// Inside the full-prefix interval, pick an orbit that visits nothing more.
    fn finish(&self, lo: f64, hi: f64, probes: &[Probe], intervals: &[[f64; 2]]) -> Result<Option<ItineraryWitness>> {
        let exact = |p: &Probe| p.symbols == self.word;
        // Middle of the longest run of exact matches.
        let mut best: Option<(usize, usize)> = None;
        let mut i = 0;
        while i < probes.len() {
            if !exact(&probes[i]) {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < probes.len() && exact(&probes[i + 1]) {
                i += 1;
            }
            if best.is_none_or(|(s, e)| e - s < i - start) {
                best = Some((start, i));
            }
            i += 1;
        }
        if let Some((s, e)) = best {
            return Ok(Some(self.witness(&probes[(s + e) / 2], hi - lo, intervals)));
        }
        // Otherwise bisect between neighbours that continue differently.
        let class = |p: &Probe| -> Option<usize> {
            self.has_prefix(p, self.word.len()).then(|| p.symbols.get(self.word.len()).copied().unwrap_or(0))
        };
        for w in probes.windows(2) {
            let (Some(c0), Some(c1)) = (class(&w[0]), class(&w[1])) else { continue };
            if c0 == c1 {
                continue;
            }
            let (mut a, mut b, ca) = (w[0].b, w[1].b, c0);
            while !self.too_narrow(a, b) {
                let mid = 0.5 * (a + b);
                let p = self.probe(mid)?;
                if exact(&p) {
                    return Ok(Some(self.witness(&p, b - a, intervals)));
                }
                match class(&p) {
                    Some(c) if c == ca => a = mid,
                    Some(_) => b = mid,
                    None => break,
                }
            }
        }
        Ok(None)
    }
}

fn prepare<'a>(
    model: &'a PotentialModel,
    energy: f64,
    opts: &'a RealizeOptions,
) -> Result<(Scatterer<'a>, Vec<Support>)> {
    if model.dimension() != 2 {
        return Err(Error::InvalidConfig("itineraries are realized in the plane".into()));
    }
    let k = model.terms().len();
    if k < 2 {
        return Err(Error::InvalidConfig("itineraries need at least two centers".into()));
    }
    let supports = effective_supports(model, energy);
    if let Some(triple) = check_nonshadowing(&supports).violation {
        return Err(Error::ShadowingViolation(triple));
    }
    if opts.check_blocks {
        for (i, term) in model.terms().iter().enumerate() {
            let single = PotentialModel::new(2, vec![*term])?;
            let d = degree_winding_with(
                &single,
                energy,
                &opts.theta,
                &WindingOptions { samples: 64, ..Default::default() },
            )?;
            if d.value == 0 {
                return Err(Error::InvalidConfig(format!("center {} has degree 0 at E = {energy}", i + 1)));
            }
        }
    }
    Ok((Scatterer::new(model, energy, &opts.scatter)?, supports))
}

fn run(
    scatterer: &Scatterer,
    supports: &[Support],
    itinerary: &Itinerary,
    opts: &RealizeOptions,
) -> Result<ItineraryWitness> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let base = opts.theta.normalize();
    let mut failure = None;
    for i in 0..opts.directions.max(1) {
        let (sin, cos) = (golden * i as f64).sin_cos();
        let theta = base * cos + rot90(&base) * sin;
        match run_along(scatterer, supports, itinerary, opts, theta) {
            Ok(w) => return Ok(w),
            Err(e @ (Error::BracketNotFound { .. } | Error::PrecisionExhausted { .. })) => {
                let deeper = |e: &Error, f: &Error| level_of(e) > level_of(f);
                if failure.as_ref().is_none_or(|f| deeper(&e, f)) {
                    failure = Some(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(failure.expect("at least one direction tried"))
}

fn level_of(e: &Error) -> usize {
    match e {
        Error::BracketNotFound { level } | Error::PrecisionExhausted { level, .. } => *level,
        _ => 0,
    }
}

fn run_along(
    scatterer: &Scatterer,
    supports: &[Support],
    itinerary: &Itinerary,
    opts: &RealizeOptions,
    theta: Vec3,
) -> Result<ItineraryWitness> {
    let j = rot90(&theta);
    let reach = opts
        .b_range
        .unwrap_or_else(|| supports.iter().map(|s| s.center.dot(&j).abs() + s.radius).fold(0.0, f64::max) * 1.05);
    let search = Search {
        scatterer: scatterer.clone(),
        theta,
        watches: support_watches(supports),
        supports: supports.to_vec(),
        word: itinerary.symbols().to_vec(),
        opts,
        runs: AtomicUsize::new(0),
        deepest: AtomicUsize::new(0),
        exhausted: Mutex::new(None),
    };
    let mut intervals = Vec::new();
    search.search(0, -reach, reach, &mut intervals)?.ok_or_else(|| match *search.exhausted.lock().expect("lock") {
        Some((level, width)) => Error::PrecisionExhausted { level, width },
        None => Error::BracketNotFound { level: search.deepest.load(Ordering::Relaxed) + 1 },
    })
}

pub fn realize_itinerary(
    model: &PotentialModel,
    energy: f64,
    itinerary: &Itinerary,
    opts: &RealizeOptions,
) -> Result<ItineraryWitness> {
    if itinerary.centers() != model.terms().len() {
        return Err(Error::InvalidConfig("itinerary alphabet does not match the model".into()));
    }
    let (scatterer, supports) = prepare(model, energy, opts)?;
    run(&scatterer, &supports, itinerary, opts)
}

/// Independent itineraries in parallel, results in input order.
pub fn realize_many(
    model: &PotentialModel,
    energy: f64,
    itineraries: &[Itinerary],
    opts: &RealizeOptions,
) -> Result<Vec<Result<ItineraryWitness>>> {
    let (scatterer, supports) = prepare(model, energy, opts)?;
    Ok(itineraries.par_iter().map(|it| run(&scatterer, &supports, it, opts)).collect())
}
