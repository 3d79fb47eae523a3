use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use scatdeg::degree::{
    deflection_quadrature, degree_central, degree_sphere_with, degree_winding_with, lagrange_degree_with,
    DegreeEstimate, LagrangeOptions, LagrangeProjection, SphereOptions, WindingOptions,
};
use scatdeg::dynamics::IntegratorConfig;
use scatdeg::geometry::{planar, rot90, unit_at};
use scatdeg::output::{fmt_f64, to_json};
use scatdeg::potential::{hill_analysis, ModelConfig, PotentialModel, RadialProfile};
use scatdeg::scattering::{
    trapping_scan, write_sweep_csv, EnergyScanEntry, MapOptions, SamplePlan, ScatterOptions, ScatterStatus, Scatterer,
};
use scatdeg::symbolic::{realize_itinerary, Itinerary, RealizeOptions};

use crate::args::*;

#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit code 2.
    Validation(String),
    /// The computation itself failed: exit code 3.
    Dynamics(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Dynamics(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Dynamics(m) => m,
        }
    }
}

impl From<scatdeg::Error> for Failure {
    fn from(e: scatdeg::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Dynamics(e.to_string())
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// Text to emit, plus a failure to report after emitting it.
pub struct Report {
    pub text: String,
    pub failure: Option<Failure>,
}

impl Report {
    fn ok(text: String) -> Self {
        Self { text, failure: None }
    }
}

pub fn run(cli: &Cli) -> Result<Report, Failure> {
    let g = &cli.global;
    let model = load_model(g)?;
    let scatter = scatter_options(g)?;
    match &cli.command {
        Command::Scatter(a) => scatter_cmd(&model, &scatter, a),
        Command::Degree(a) => degree_cmd(&model, &scatter, g.seed, a),
        Command::Scan(a) => scan_cmd(&model, &scatter, g.seed, a),
        Command::Deflect(a) => deflect_cmd(&model, a),
        Command::Hill(a) => hill_cmd(&model, a),
        Command::Itinerary(a) => itinerary_cmd(&model, &scatter, a),
        Command::Trajfan(a) => trajfan_cmd(&model, &scatter, a),
    }
}

fn load_model(g: &Global) -> Result<PotentialModel, Failure> {
    let path = g.config.as_ref().ok_or_else(|| invalid("--config is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(ModelConfig::from_json(&text)?.build()?)
}

fn scatter_options(g: &Global) -> Result<ScatterOptions, Failure> {
    let mut opts = ScatterOptions::default();
    if let Some(tol) = g.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid(format!("--tol must lie in (0, 1), got {tol}")));
        }
        opts.integrator = IntegratorConfig { rtol: tol, atol: tol, ..opts.integrator };
    }
    Ok(opts)
}

fn check_energy(e: f64) -> Result<(), Failure> {
    if e > 0.0 && e.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("energy must be positive and finite, got {e}")))
    }
}

/// Incoming direction in the q1-q2 plane.
fn direction(angle: f64) -> Result<scatdeg::Vec3, Failure> {
    if angle.is_finite() {
        Ok(unit_at(angle))
    } else {
        Err(invalid("--theta must be finite"))
    }
}

fn scatter_cmd(model: &PotentialModel, opts: &ScatterOptions, a: &ScatterArgs) -> Result<Report, Failure> {
    check_energy(a.energy)?;
    let bs = parse_range(&a.b_range).map_err(invalid)?;
    let theta = direction(a.theta)?;
    let sc = Scatterer::new(model, a.energy, opts)?;
    let records =
        bs.par_iter().map(|&b| sc.record(&theta, &(rot90(&theta) * b))).collect::<scatdeg::Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_sweep_csv(&records, &mut buf).expect("writing to memory");
    let failed = records.iter().filter(|r| r.status == ScatterStatus::Failed).count();
    let failure = (failed > 0).then(|| Failure::Dynamics(format!("{failed} of {} orbits failed", records.len())));
    Ok(Report { text: String::from_utf8(buf).expect("CSV is UTF-8"), failure })
}

#[derive(Serialize)]
struct DegreeOutput {
    #[serde(flatten)]
    estimate: DegreeEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check: Option<DegreeEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projection: Option<LagrangeProjection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trapping: Option<EnergyScanEntry>,
}

fn degree_cmd(model: &PotentialModel, opts: &ScatterOptions, seed: u64, a: &DegreeArgs) -> Result<Report, Failure> {
    check_energy(a.energy)?;
    let theta = direction(a.theta)?;
    let central = model.dimension() == 2 && RadialProfile::of_central(model).is_some();
    let method = match a.method {
        Method::Auto if model.dimension() == 3 => Method::Sphere3d,
        Method::Auto if central => Method::QuadratureCentral,
        Method::Auto => Method::Winding2d,
        m => m,
    };
    let winding = || {
        let w = WindingOptions { samples: a.samples, map: MapOptions { scatter: opts.clone(), ..Default::default() } };
        degree_winding_with(model, a.energy, &theta, &w)
    };
    let (estimate, cross_check, projection) = match method {
        Method::Sphere3d => {
            let s = SphereOptions { scatter: opts.clone(), ..Default::default() };
            (degree_sphere_with(model, a.energy, &theta, a.mesh, &s)?, None, None)
        }
        // Central models get both estimates; the integrated one leads.
        Method::QuadratureCentral if a.method == Method::Auto => {
            (winding()?, Some(degree_central(model, a.energy)?), None)
        }
        Method::QuadratureCentral => (degree_central(model, a.energy)?, None, None),
        Method::Winding2d => (winding()?, None, None),
        Method::LagrangeProjection => {
            let text =
                a.target.as_deref().ok_or_else(|| invalid("--target x,y is required for the Lagrange projection"))?;
            let [x, y] = parse_point(text).map_err(invalid)?;
            let l = LagrangeOptions { seed, scatter: opts.clone(), ..Default::default() };
            let r = lagrange_degree_with(model, a.energy, &theta, &planar(x, y), &l)?;
            (r.estimate, None, Some(r.projection))
        }
        Method::Auto => unreachable!("resolved above"),
    };
    let mut out = DegreeOutput { estimate, cross_check, projection, trapping: None };
    if a.with_scan {
        let plan = SamplePlan { seed, scatter: opts.clone(), ..Default::default() };
        out.trapping = trapping_scan(model, &[a.energy], &plan)?.entries.pop();
    }
    let failure = match &out.cross_check {
        Some(c) if c.value != out.estimate.value => {
            Some(Failure::Dynamics(format!("winding gives {} but quadrature gives {}", out.estimate.value, c.value)))
        }
        _ => None,
    };
    Ok(Report { text: to_json(&out, true), failure })
}

fn scan_cmd(model: &PotentialModel, opts: &ScatterOptions, seed: u64, a: &ScanArgs) -> Result<Report, Failure> {
    let energies = parse_values(&a.energies).map_err(invalid)?;
    for &e in &energies {
        check_energy(e)?;
    }
    let plan = SamplePlan {
        directions: a.directions,
        impacts: a.impacts,
        monte_carlo: a.monte_carlo,
        seed,
        hill_resolution: a.hill_resolution,
        scatter: opts.clone(),
    };
    Ok(Report::ok(to_json(&trapping_scan(model, &energies, &plan)?, true)))
}

fn deflect_cmd(model: &PotentialModel, a: &DeflectArgs) -> Result<Report, Failure> {
    check_energy(a.energy)?;
    let profile =
        RadialProfile::of_central(model).ok_or_else(|| invalid("deflection needs all terms on one center"))?;
    if !(a.l.is_finite() && a.l != 0.0) {
        return Err(invalid("--l must be finite and nonzero"));
    }
    let d = deflection_quadrature(&profile, a.energy, a.l)?;
    let failure = (!d.converged).then(|| Failure::Dynamics("quadrature did not converge".into()));
    Ok(Report { text: to_json(&d, true), failure })
}

fn hill_cmd(model: &PotentialModel, a: &HillArgs) -> Result<Report, Failure> {
    check_energy(a.energy)?;
    Ok(Report::ok(to_json(&hill_analysis(model, a.energy, a.resolution)?, true)))
}

fn itinerary_cmd(model: &PotentialModel, opts: &ScatterOptions, a: &ItineraryArgs) -> Result<Report, Failure> {
    check_energy(a.energy)?;
    let symbols = parse_sequence(&a.sequence).map_err(invalid)?;
    let it = Itinerary::new(symbols, model.terms().len())?;
    let r = RealizeOptions {
        theta: direction(a.theta)?,
        directions: a.directions,
        scatter: opts.clone(),
        ..Default::default()
    };
    Ok(Report::ok(to_json(&realize_itinerary(model, a.energy, &it, &r)?, true)))
}

fn trajfan_cmd(model: &PotentialModel, opts: &ScatterOptions, a: &TrajfanArgs) -> Result<Report, Failure> {
    check_energy(a.energy)?;
    let bs = parse_range(&a.b_range).map_err(invalid)?;
    let theta = direction(a.theta)?;
    let sc = Scatterer::new(model, a.energy, opts)?;
    let fans = bs
        .par_iter()
        .map(|&b| sc.trajectory(&theta, &(rot90(&theta) * b), &[]))
        .collect::<scatdeg::Result<Vec<_>>>()?;
    let d = model.dimension();
    let mut text = String::from("trajectory,b,t");
    for k in 1..=d {
        write!(text, ",q{k}").unwrap();
    }
    text.push('\n');
    for (i, (b, tr)) in bs.iter().zip(&fans).enumerate() {
        for s in &tr.states {
            write!(text, "{i},{},{}", fmt_f64(*b), fmt_f64(s.t)).unwrap();
            for k in 0..d {
                write!(text, ",{}", fmt_f64(s.q[k])).unwrap();
            }
            text.push('\n');
        }
    }
    Ok(Report::ok(text))
}
