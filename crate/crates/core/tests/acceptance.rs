//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scatdeg::degree::{deflection_quadrature, degree_sphere, degree_winding, lagrange_degree};
use scatdeg::dynamics::{integrate_auto, IntegratorConfig, PhaseState, StopCondition, Trajectory};
use scatdeg::geometry::{angle_of, planar, rot90, unit_at, wrap};
use scatdeg::potential::{
    hill_analysis, virial_radius, HillClass, PotentialModel, PotentialTerm, RadialProfile, TermKind,
};
use scatdeg::scattering::{trapping_scan, SamplePlan, ScanClass, ScanEvidence, ScatterOptions, Scatterer};
use scatdeg::symbolic::{realize_many, Itinerary, RealizeOptions};
use scatdeg::Vec3;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn kepler(alpha: f64) -> PotentialModel {
    PotentialModel::new(2, vec![PotentialTerm::singular(1.0, alpha, planar(0.0, 0.0))]).unwrap()
}

fn bump() -> PotentialModel {
    PotentialModel::new(2, vec![PotentialTerm::gaussian(2.0, 1.0, planar(0.0, 0.0))]).unwrap()
}

fn lumpy() -> PotentialModel {
    PotentialModel::new(
        2,
        vec![
            PotentialTerm::gaussian(1.5, 1.0, planar(0.7, -0.3)),
            PotentialTerm::gaussian(-0.8, 0.6, planar(-0.5, 0.9)),
        ],
    )
    .unwrap()
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn kepler_planar_degree() -> Check {
    let m = kepler(1.0);
    let mut notes = Vec::new();
    let mut ok = true;
    for e in [0.5, 1.0, 2.0] {
        let t = Instant::now();
        let d = degree_winding(&m, e, &planar(1.0, 0.0)).map_err(|x| x.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        ok &= d.value == -1 && d.residual <= 0.02 && secs <= 60.0;
        notes.push(format!("E={e}: {} (residual {:.1e}, {secs:.1}s)", d.value, d.residual));
    }
    ensure(ok, notes.join("; "))
}

fn second_order_collision_degree() -> Check {
    let m = kepler(4.0 / 3.0);
    let d = degree_winding(&m, 1.0, &planar(1.0, 0.0)).map_err(|x| x.to_string())?;
    // The sweep must actually pass through collisions.
    let sc = Scatterer::new(&m, 1.0, &ScatterOptions::default()).map_err(|x| x.to_string())?;
    let head_on = sc.scatter(&planar(1.0, 0.0), &planar(0.0, 0.0)).map_err(|x| x.to_string())?;
    ensure(
        d.value == -2 && d.residual <= 0.05 && head_on.diagnostics.collisions > 0,
        format!(
            "degree {} residual {:.1e}, head-on collisions {}",
            d.value, d.residual, head_on.diagnostics.collisions
        ),
    )
}

fn bump_dichotomy() -> Check {
    let m = bump();
    let mut ok = true;
    let mut notes = Vec::new();
    for (e, want, hill) in [
        (0.5, 1, HillClass::SingleLoop),
        (1.0, 1, HillClass::SingleLoop),
        (1.9, 1, HillClass::SingleLoop),
        (2.1, 0, HillClass::Empty),
        (3.0, 0, HillClass::Empty),
    ] {
        let d = degree_winding(&m, e, &planar(1.0, 0.0)).map_err(|x| x.to_string())?;
        let h = hill_analysis(&m, e, 400).map_err(|x| x.to_string())?;
        ok &= d.value == want && h.classification == hill;
        notes.push(format!("E={e}: {} {:?}", d.value, h.classification));
    }
    ensure(ok, notes.join("; "))
}

fn collision_limit_quadrature() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=3 {
        let alpha = 2.0 * n as f64 / (n as f64 + 1.0);
        let profile = RadialProfile::new(vec![TermKind::Singular { strength: 1.0, exponent: alpha }]);
        let target = (n as f64 + 1.0) * PI;
        let errs = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&l| deflection_quadrature(&profile, 1.0, l).map(|d| (d.delta_phi - target).abs()))
            .collect::<scatdeg::Result<Vec<f64>>>()
            .map_err(|x| x.to_string())?;
        ok &= errs[0] > errs[1] && errs[1] > errs[2] && errs[2] <= 5e-3;
        notes.push(format!("n={n}: {:.1e} {:.1e} {:.1e}", errs[0], errs[1], errs[2]));
    }
    ensure(ok, notes.join("; "))
}

fn kepler_deflection_oracle() -> Check {
    let m = kepler(1.0);
    let theta = planar(1.0, 0.0);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for e in [0.2, 0.6, 1.2, 2.0] {
        let sc = Scatterer::new(&m, e, &ScatterOptions::default()).map_err(|x| x.to_string())?;
        for b in [0.2, 0.7, 1.5, 3.0, 5.0] {
            let r = sc.scatter(&theta, &planar(0.0, b)).map_err(|x| x.to_string())?;
            let chi = 2.0 * (1.0 / (2.0 * e * b)).atan();
            worst = worst.max((r.deflection().abs() - chi).abs());
            count += 1;
        }
    }
    ensure(worst <= 1e-4, format!("{count} pairs, worst |chi error| {worst:.1e}"))
}

fn lagrange_consistency() -> Check {
    let m = bump();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut notes = Vec::new();
    let mut ok = true;
    for e in [1.0, 3.0] {
        let expected = degree_winding(&m, e, &planar(1.0, 0.0)).map_err(|x| x.to_string())?.value;
        let mut values = Vec::new();
        while values.len() < 5 {
            let q = planar(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            if m.value(&q).map_err(|x| x.to_string())? >= e {
                continue;
            }
            let r = lagrange_degree(&m, e, &planar(1.0, 0.0), &q).map_err(|x| x.to_string())?;
            values.push(r.projection.projection_degree);
        }
        ok &= values.iter().all(|&v| v == 1 - expected);
        notes.push(format!("E={e}: winding {expected}, projection degrees {values:?}"));
    }
    ensure(ok, notes.join("; "))
}

fn spatial_kepler_degree() -> Check {
    let m = PotentialModel::new(3, vec![PotentialTerm::singular(1.0, 1.0, Vec3::zeros())]).unwrap();
    let t = Instant::now();
    let d = degree_sphere(&m, 1.0, &Vec3::new(1.0, 0.0, 0.0), 3).map_err(|x| x.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    ensure(
        d.value == 1 && d.residual <= 0.05 && secs <= 600.0,
        format!("degree {} residual {:.1e}, {} samples, {secs:.1}s", d.value, d.residual, d.samples),
    )
}

fn start(m: &PotentialModel, q: Vec3, dir: Vec3, energy: f64) -> PhaseState {
    let speed = (2.0 * (energy - m.value(&q).unwrap())).sqrt();
    PhaseState::new(q, dir.normalize() * speed, 0.0)
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn energy_drift(m: &PotentialModel, tr: &Trajectory, singular: Option<Vec3>) -> f64 {
    tr.states
        .iter()
        // Rounding in the kinetic and potential parts grows like 1/r at a collision.
        .filter(|s| singular.is_none_or(|c| (s.q - c).norm() > 1e-2))
        .map(|s| (s.energy(m).unwrap() - tr.energy).abs() / (1.0 + tr.energy.abs()))
        .fold(0.0, f64::max)
}

fn invariant_suites() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;

    // Energy.
    let mixed = PotentialModel::new(
        2,
        vec![PotentialTerm::gaussian(2.0, 1.0, planar(0.5, 0.2)), PotentialTerm::singular(1.0, 1.0, planar(-0.5, 0.0))],
    )
    .unwrap();
    let runs: Vec<(PotentialModel, PhaseState, Option<Vec3>)> = vec![
        (bump(), start(&bump(), planar(-10.0, 0.4), planar(1.0, 0.0), 1.0), None),
        (lumpy(), start(&lumpy(), planar(-10.0, 0.1), planar(1.0, 0.1), 0.7), None),
        (kepler(1.0), start(&kepler(1.0), planar(-10.0, 0.0), planar(1.0, 0.0), 1.0), Some(Vec3::zeros())),
        (kepler(4.0 / 3.0), start(&kepler(4.0 / 3.0), planar(-10.0, 1e-3), planar(1.0, 0.0), 1.0), Some(Vec3::zeros())),
        (mixed.clone(), start(&mixed, planar(-6.0, 0.3), planar(1.0, 0.05), 1.0), Some(planar(-0.5, 0.0))),
    ];
    let mut drift: f64 = 0.0;
    for (m, x0, s) in &runs {
        let tr = integrate_auto(m, x0, &StopCondition::until(30.0), &cfg()).map_err(|x| x.to_string())?;
        drift = drift.max(energy_drift(m, &tr, *s));
    }
    ok &= drift <= 1e-8;
    notes.push(format!("energy drift {drift:.1e}"));

    // Angular momentum about the center of central models.
    let mut l_drift: f64 = 0.0;
    for (m, b) in [(kepler(1.0), 0.5), (kepler(1.0), 0.05), (bump(), 0.7), (kepler(1.5), 1.0)] {
        let x0 = start(&m, planar(-10.0, b), planar(1.0, 0.0), 1.0);
        let l0 = x0.angular_momentum(&Vec3::zeros());
        let tr = integrate_auto(&m, &x0, &StopCondition::until(25.0), &cfg()).map_err(|x| x.to_string())?;
        for s in &tr.states {
            l_drift = l_drift.max((s.angular_momentum(&Vec3::zeros()) - l0).abs());
        }
    }
    ok &= l_drift <= 1e-8;
    notes.push(format!("angular momentum drift {l_drift:.1e}"));

    // Reversibility.
    let mut rev: f64 = 0.0;
    for (m, x0, _) in &runs {
        let t = 10.0;
        let fwd = integrate_auto(m, x0, &StopCondition::until(t), &cfg()).map_err(|x| x.to_string())?;
        let mid = fwd.last();
        let back = integrate_auto(m, &PhaseState::new(mid.q, -mid.p, 0.0), &StopCondition::until(t), &cfg())
            .map_err(|x| x.to_string())?;
        rev = rev.max((back.last().q - x0.q).norm());
    }
    ok &= rev <= 1e-6;
    notes.push(format!("reversibility {rev:.1e}"));

    // Radial virial outside the interaction zone.
    let mut violations = 0;
    let mut pairs = 0;
    for m in [bump(), lumpy(), kepler(1.0)] {
        let rv = virial_radius(&m, 1.0).map_err(|x| x.to_string())?.radius;
        for i in 0..17 {
            let b = -4.0 + 0.5 * i as f64;
            let x0 = start(&m, planar(-12.0 * rv, b), planar(1.0, 0.0), 1.0);
            let stop = StopCondition::escape(rv, 12.0 * rv, 1e5);
            let tr = integrate_auto(&m, &x0, &stop, &cfg()).map_err(|x| x.to_string())?;
            for w in tr.states.windows(2) {
                if w[0].q.norm() >= rv && w[1].q.norm() >= rv {
                    pairs += 1;
                    if w[1].q.dot(&w[1].p) <= w[0].q.dot(&w[0].p) {
                        violations += 1;
                    }
                }
            }
        }
    }
    ok &= violations == 0;
    notes.push(format!("virial violations {violations} of {pairs}"));

    // Area preservation of the scattering map in (angle, impact) coordinates.
    let m = lumpy();
    let sc = Scatterer::new(&m, 1.0, &ScatterOptions::default()).map_err(|x| x.to_string())?;
    let out = |phi: f64, b: f64| -> scatdeg::Result<(f64, f64)> {
        let theta = unit_at(phi);
        let r = sc.scatter(&theta, &(rot90(&theta) * b))?;
        Ok((r.b_out_scalar(), angle_of(&r.theta_out)))
    };
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (phi, b) = (0.31 * k as f64, -2.0 + 0.2 * k as f64);
        let diff = |a: (f64, f64), c: (f64, f64)| (a.0 - c.0, wrap(a.1 - c.1));
        let db = diff(out(phi, b + h).map_err(|x| x.to_string())?, out(phi, b - h).map_err(|x| x.to_string())?);
        let dphi = diff(out(phi + h, b).map_err(|x| x.to_string())?, out(phi - h, b).map_err(|x| x.to_string())?);
        let det = (db.0 * dphi.1 - db.1 * dphi.0) / (4.0 * h * h);
        worst = worst.max((det - 1.0).abs());
    }
    ok &= worst <= 1e-3;
    notes.push(format!("|det - 1| {worst:.1e} at 20 points"));

    ensure(ok, notes.join("; "))
}

fn symbolic_realization() -> Check {
    let r = 12.0 / 3f64.sqrt();
    let terms = (0..3)
        .map(|i| {
            let a = PI / 2.0 + 2.0 * PI * i as f64 / 3.0;
            PotentialTerm::gaussian(2.0, 1.0, planar(r * a.cos(), r * a.sin()))
        })
        .collect();
    let m = PotentialModel::new(2, terms).unwrap();
    let words = Itinerary::all_words(3, 5);
    let results = realize_many(&m, 1.0, &words, &RealizeOptions::default()).map_err(|x| x.to_string())?;
    let mut realized = 0;
    let mut bad = Vec::new();
    for (w, res) in words.iter().zip(&results) {
        let Ok(wit) = res else {
            bad.push(format!("{:?}: {}", w.symbols(), res.as_ref().unwrap_err()));
            continue;
        };
        let log: Vec<usize> = wit.visit_log.iter().map(|v| v.center).collect();
        let nested = wit.intervals.len() == w.len()
            && wit
                .intervals
                .windows(2)
                .all(|p| p[1][0] >= p[0][0] && p[1][1] <= p[0][1] && p[1][1] - p[1][0] < p[0][1] - p[0][0])
            && wit.intervals.last().is_some_and(|i| i[0] <= wit.b && wit.b <= i[1]);
        if log == w.symbols() && nested {
            realized += 1;
        } else {
            bad.push(format!("{:?}: log {log:?}, nested {nested}", w.symbols()));
        }
    }
    ensure(
        realized == 48 && words.len() == 48,
        format!(
            "{realized} of {} words realized{}",
            words.len(),
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

fn topology_diagnostic() -> Check {
    let m = PotentialModel::new(
        2,
        vec![PotentialTerm::gaussian(2.0, 1.0, planar(-5.0, 0.0)), PotentialTerm::gaussian(2.0, 1.0, planar(5.0, 0.0))],
    )
    .unwrap();
    let report = trapping_scan(&m, &[1.0], &SamplePlan::default()).map_err(|x| x.to_string())?;
    let e = &report.entries[0];
    ensure(
        e.classification == ScanClass::TrappingDetected
            && e.evidence == ScanEvidence::HillMultiComponent
            && e.hill == Some(HillClass::MultiComponent)
            && e.launches == 0
            && e.timeouts == 0,
        format!("{:?} via {:?}, {} launches, {} timeouts", e.classification, e.evidence, e.launches, e.timeouts),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("kepler planar degree", kepler_planar_degree),
        ("second-order collision degree", second_order_collision_degree),
        ("gaussian bump dichotomy", bump_dichotomy),
        ("collision-limit swept angle", collision_limit_quadrature),
        ("kepler deflection oracle", kepler_deflection_oracle),
        ("lagrange projection consistency", lagrange_consistency),
        ("spatial kepler degree", spatial_kepler_degree),
        ("invariant suites", invariant_suites),
        ("symbolic realization", symbolic_realization),
        ("hill topology diagnostic", topology_diagnostic),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = fmt_secs(t.elapsed());
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name} [{secs}]: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs}]: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {}", criteria.len() - failed, criteria.len(), fmt_secs(total.elapsed()));
    if failed > 0 {
        std::process::exit(1);
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
