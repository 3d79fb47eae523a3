use super::*;
use crate::geometry::planar;
use crate::potential::{virial_radius, PotentialTerm};
use crate::quadrature;
use proptest::prelude::*;

fn kepler(alpha: f64) -> PotentialModel {
    PotentialModel::new(2, vec![PotentialTerm::singular(1.0, alpha, Vec3::zeros())]).unwrap()
}

fn bump() -> PotentialModel {
    PotentialModel::new(2, vec![PotentialTerm::gaussian(2.0, 1.0, Vec3::zeros())]).unwrap()
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn start(model: &PotentialModel, q: Vec3, dir: Vec3, energy: f64) -> PhaseState {
    let v = model.value(&q).unwrap();
    PhaseState::new(q, dir.normalize() * (2.0 * (energy - v)).sqrt(), 0.0)
}

#[test]
fn free_motion_is_a_straight_line() {
    let free = PotentialModel::free(2);
    let x0 = PhaseState::new(planar(0.0, 1.0), planar(1.0, 0.0), 0.0);
    let tr = integrate(&free, &x0, &StopCondition::until(5.0), &cfg()).unwrap();
    let last = tr.last();
    assert_eq!(last.t, 5.0);
    assert!((last.q - planar(5.0, 1.0)).norm() < 1e-12);
    let esc = integrate(&free, &x0, &StopCondition::escape(1.0, 10.0, 100.0), &cfg()).unwrap();
    assert_eq!(esc.escape_time(), Some(0.0));
    assert_eq!(esc.outcome, Outcome::Escaped);
    assert!((esc.last().q.norm() - 10.0).abs() < 1e-9);
}

#[test]
fn circular_kepler_orbit_times_out_on_the_circle() {
    let m = kepler(1.0);
    let x0 = PhaseState::new(planar(1.0, 0.0), planar(0.0, 1.0), 0.0);
    let stop = StopCondition::escape(2.5, 25.0, 200.0);
    let tr = integrate(&m, &x0, &stop, &cfg()).unwrap();
    assert_eq!(tr.outcome, Outcome::Timeout);
    assert_eq!(tr.escape_time(), None);
    assert!(tr.states.iter().all(|s| (s.q.norm() - 1.0).abs() <= 1e-6));
    assert!(tr.events.iter().any(|e| e.kind == EventKind::Timeout));
}

#[test]
fn head_on_bump_reflects() {
    let m = bump();
    let x0 = start(&m, planar(-20.0, 0.0), planar(1.0, 0.0), 1.0);
    let rv = virial_radius(&m, 1.0).unwrap().radius;
    let tr = integrate(&m, &x0, &StopCondition::escape(rv, 10.0 * rv, 1e4), &cfg()).unwrap();
    assert_eq!(tr.outcome, Outcome::Escaped);
    assert!((tr.last().p.normalize() - planar(-1.0, 0.0)).norm() < 1e-6);
}

fn radial_fall_time(alpha: f64, energy: f64, r0: f64) -> f64 {
    quadrature::integrate(|r| 1.0 / (2.0 * (energy + r.powf(-alpha))).sqrt(), 0.0, r0, 1e-15, 1e-14, 500).value
}

#[test]
fn odd_collision_reverses_momentum() {
    let m = kepler(1.0);
    let x0 = PhaseState::new(planar(1.0, 0.0), planar(-2.0, 0.0), 0.0);
    let tc = radial_fall_time(1.0, 1.0, 1.0);
    let tr = integrate_regularized(&m, &x0, &StopCondition::until(2.0 * tc), &cfg()).unwrap();
    assert_eq!(tr.collisions(), 1);
    let last = tr.last();
    assert!((last.q - planar(1.0, 0.0)).norm() < 1e-8, "{:?}", last.q);
    assert!((last.p - planar(2.0, 0.0)).norm() < 1e-8, "{:?}", last.p);
    let coll = tr.events.iter().find(|e| matches!(e.kind, EventKind::Collision { .. })).unwrap();
    assert!((coll.t - tc).abs() < 1e-10);
}

#[test]
fn even_collision_passes_through() {
    let m = kepler(4.0 / 3.0);
    let x0 = PhaseState::new(planar(1.0, 0.0), planar(-2.0, 0.0), 0.0);
    let tc = radial_fall_time(4.0 / 3.0, 1.0, 1.0);
    let tr = integrate_regularized(&m, &x0, &StopCondition::until(2.0 * tc), &cfg()).unwrap();
    assert_eq!(tr.collisions(), 1);
    let last = tr.last();
    assert!((last.q - planar(-1.0, 0.0)).norm() < 1e-8);
    assert!((last.p - planar(-2.0, 0.0)).norm() < 1e-8);
}

#[test]
fn collision_pericentre_directions() {
    for (alpha, expect_pos) in [(1.0, true), (4.0 / 3.0, false)] {
        let m = kepler(alpha);
        let x0 = PhaseState::new(planar(0.6, 0.8), planar(-1.2, -1.6), 0.0);
        let tr = integrate_regularized(&m, &x0, &StopCondition::until(1.0), &cfg()).unwrap();
        let peri = pericentre(&tr, &Vec3::zeros()).unwrap();
        assert_eq!(peri.distance, 0.0);
        if expect_pos {
            // n = 1: the limiting pericentre lies opposite the incoming ray.
            assert!((peri.direction.unwrap() - planar(-0.6, -0.8)).norm() < 1e-12);
        } else {
            // n = 2: the limiting pericentre velocity is minus the incoming velocity.
            assert!((peri.velocity_direction.unwrap() - planar(0.6, 0.8)).norm() < 1e-12);
        }
    }
}

#[test]
fn free_pericentre() {
    let free = PotentialModel::free(2);
    let x0 = PhaseState::new(planar(-5.0, 1.0), planar(1.0, 0.0), 0.0);
    let stop = StopCondition::until(10.0).watching(Watch { center: Vec3::zeros(), radius: None });
    let tr = integrate(&free, &x0, &stop, &cfg()).unwrap();
    let p = pericentre(&tr, &Vec3::zeros()).unwrap();
    assert!((p.time - 5.0).abs() < 1e-10);
    assert!((p.direction.unwrap() - planar(0.0, 1.0)).norm() < 1e-10);
    assert!((p.angular_momentum - 1.0).abs() < 1e-12);
}

#[test]
fn kepler_pericentre_radius_matches_conic() {
    let m = kepler(1.0);
    let x0 = start(&m, planar(-200.0, 1.0), planar(1.0, 0.0), 0.5);
    let (e, l) = (x0.energy(&m).unwrap(), x0.angular_momentum(&Vec3::zeros()));
    let tr = integrate_regularized(&m, &x0, &StopCondition::escape(2.5, 25.0, 1e4), &cfg()).unwrap();
    let p = pericentre(&tr, &Vec3::zeros()).unwrap();
    let rmin = (-1.0 + (1.0 + 2.0 * e * l * l).sqrt()) / (2.0 * e);
    assert!((p.distance - rmin).abs() < 1e-9);
}

#[test]
fn near_collision_conserves_angular_momentum_and_energy() {
    for alpha in [1.0, 4.0 / 3.0, 1.5] {
        let m = kepler(alpha);
        let l0 = 1e-3;
        let x0 = start(&m, planar(-20.0, l0 / 1.0), planar(1.0, 0.0), 0.5);
        let l_init = x0.angular_momentum(&Vec3::zeros());
        let tr = integrate_regularized(&m, &x0, &StopCondition::escape(5.0, 30.0, 1e4), &cfg()).unwrap();
        assert_eq!(tr.outcome, Outcome::Escaped);
        for s in &tr.states {
            assert!((s.angular_momentum(&Vec3::zeros()) - l_init).abs() <= 1e-8);
        }
        for s in tr.states.iter().filter(|s| s.q.norm() > 0.01) {
            assert!((s.energy(&m).unwrap() - 0.5).abs() <= 1e-8 * 1.5);
        }
    }
}

#[test]
fn reversibility() {
    let m = PotentialModel::new(
        2,
        vec![PotentialTerm::gaussian(2.0, 1.0, planar(0.5, 0.2)), PotentialTerm::singular(1.0, 1.0, planar(-0.5, 0.0))],
    )
    .unwrap();
    let x0 = start(&m, planar(-6.0, 0.3), planar(1.0, 0.05), 1.0);
    let t = 10.0;
    let fwd = integrate_regularized(&m, &x0, &StopCondition::until(t), &cfg()).unwrap();
    let mid = fwd.last();
    let back0 = PhaseState::new(mid.q, -mid.p, 0.0);
    let back = integrate_regularized(&m, &back0, &StopCondition::until(t), &cfg()).unwrap();
    assert!((back.last().q - x0.q).norm() < 1e-6);
}

#[test]
fn virial_grows_outside_the_interaction_zone() {
    let m = bump();
    let rv = virial_radius(&m, 1.0).unwrap().radius;
    for b in [0.0, 0.3, 0.9, 1.7] {
        let x0 = start(&m, planar(-30.0, b), planar(1.0, 0.0), 1.0);
        let tr = integrate(&m, &x0, &StopCondition::escape(rv, 10.0 * rv, 1e4), &cfg()).unwrap();
        let mut violations = 0;
        for w in tr.states.windows(2) {
            if w[0].q.norm() >= rv && w[1].q.norm() >= rv && w[1].q.dot(&w[1].p) <= w[0].q.dot(&w[0].p) {
                violations += 1;
            }
        }
        assert_eq!(violations, 0);
        let te = tr.escape_time().unwrap();
        assert!(te.is_finite());
        // No re-entry after escape.
        assert!(tr.states.iter().filter(|s| s.t > te + 1e-9).all(|s| s.q.norm() >= rv * (1.0 - 1e-12)));
    }
}

#[test]
fn escape_obeys_quadratic_growth_bound() {
    // |q(t)|^2 >= |q0|^2 + E t^2 / 2 once outside with outgoing virial.
    let m = bump();
    let rv = virial_radius(&m, 1.0).unwrap().radius;
    let x0 = start(&m, planar(-30.0, 0.7), planar(1.0, 0.0), 1.0);
    let tr = integrate(&m, &x0, &StopCondition::escape(rv, 10.0 * rv, 1e4), &cfg()).unwrap();
    let te = tr.escape_time().unwrap();
    let e0 = tr.events.iter().find(|e| e.kind == EventKind::Escape).unwrap().state;
    for s in tr.states.iter().filter(|s| s.t > te) {
        let dt = s.t - te;
        assert!(s.q.norm_squared() >= e0.q.norm_squared() + 0.5 * dt * dt - 1e-9);
    }
}

#[test]
fn unregularizable_collision_underflows() {
    let m = kepler(1.2);
    assert!(matches!(
        integrate_regularized(
            &m,
            &PhaseState::new(planar(1.0, 0.0), planar(-2.0, 0.0), 0.0),
            &StopCondition::until(3.0),
            &cfg()
        ),
        Err(Error::NotRegularizable { .. })
    ));
    let res =
        integrate(&m, &PhaseState::new(planar(1.0, 0.0), planar(-2.0, 0.0), 0.0), &StopCondition::until(3.0), &cfg());
    assert!(matches!(res, Err(Error::StepSizeUnderflow { .. } | Error::EnergyDriftExceeded { .. })), "{res:?}");
}

#[test]
fn regularizable_exponents() {
    assert_eq!(regularization_order(1.0).unwrap(), 1);
    assert_eq!(regularization_order(4.0 / 3.0).unwrap(), 2);
    assert_eq!(regularization_order(1.5).unwrap(), 3);
    assert!(regularization_order(0.5).is_err());
}

#[test]
fn dense_output_matches_samples() {
    let m = bump();
    let x0 = start(&m, planar(-10.0, 0.4), planar(1.0, 0.0), 1.0);
    let c = IntegratorConfig { keep_dense: true, ..cfg() };
    let tr = integrate(&m, &x0, &StopCondition::until(20.0), &c).unwrap();
    for s in &tr.states {
        let d = tr.state_at(s.t).unwrap();
        assert!((d.q - s.q).norm() < 1e-10);
    }
    let mid = tr.state_at(9.3).unwrap();
    let fine = integrate(&m, &x0, &StopCondition::until(9.3), &cfg()).unwrap();
    assert!((mid.q - fine.last().q).norm() < 1e-9);
}

#[test]
fn parallel_batch_keeps_order() {
    let m = bump();
    let starts: Vec<_> = (0..16).map(|k| start(&m, planar(-10.0, 0.1 * k as f64), planar(1.0, 0.0), 1.0)).collect();
    let stop = StopCondition::until(12.0);
    let out = integrate_many(&m, &starts, &stop, &cfg());
    for (x, r) in starts.iter().zip(&out) {
        let single = integrate(&m, x, &stop, &cfg()).unwrap();
        assert_eq!(single.last(), r.as_ref().unwrap().last());
    }
}

#[test]
fn csv_and_events_dump() {
    let m = kepler(1.0);
    let x0 = PhaseState::new(planar(1.0, 0.0), planar(-2.0, 0.0), 0.0);
    let tr = integrate_regularized(&m, &x0, &StopCondition::until(1.0), &cfg()).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&tr, &m, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,q1,q2,p1,p2,H\n"));
    assert_eq!(text.lines().count(), tr.states.len() + 1);
    let ev: serde_json::Value = serde_json::from_str(&events_json(&tr)).unwrap();
    assert_eq!(ev["events"][0]["kind"], "collision");
    assert_eq!(ev["events"][0]["order"], 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn energy_is_conserved(b in -2.0f64..2.0, e in 0.3f64..3.0, phi in 0.0f64..std::f64::consts::TAU) {
        let m = PotentialModel::new(2, vec![
            PotentialTerm::gaussian(2.0, 1.0, planar(0.4, 0.0)),
            PotentialTerm::singular(1.0, 1.0, Vec3::zeros()),
        ]).unwrap();
        let dir = planar(phi.cos(), phi.sin());
        let q = -dir * 15.0 + crate::geometry::rot90(&dir) * b;
        let x0 = start(&m, q, dir, e);
        let tr = integrate_regularized(&m, &x0, &StopCondition::escape(6.0, 20.0, 1e4), &cfg()).unwrap();
        for s in &tr.states {
            prop_assert!((s.energy(&m).unwrap() - e).abs() <= 1e-8 * (1.0 + e));
        }
    }

    #[test]
    fn flipping_momentum_retraces(b in -1.5f64..1.5, e in 0.3f64..3.0, t in 1.0f64..12.0) {
        let m = PotentialModel::new(2, vec![
            PotentialTerm::gaussian(2.0, 1.0, planar(0.5, 0.2)),
            PotentialTerm::singular(1.0, 1.0, planar(-0.5, 0.0)),
        ]).unwrap();
        let x0 = start(&m, planar(-6.0, b), planar(1.0, 0.0), e);
        let fwd = integrate_regularized(&m, &x0, &StopCondition::until(t), &cfg()).unwrap();
        let mid = fwd.last();
        let back0 = PhaseState::new(mid.q, -mid.p, 0.0);
        let back = integrate_regularized(&m, &back0, &StopCondition::until(t), &cfg()).unwrap();
        prop_assert!((back.last().q - x0.q).norm() < 1e-6);
    }

    #[test]
    fn central_orbits_keep_angular_momentum(b in -3.0f64..3.0, e in 0.2f64..3.0, n in 1usize..4) {
        let m = kepler(2.0 * n as f64 / (n as f64 + 1.0));
        let x0 = start(&m, planar(-20.0, b), planar(1.0, 0.0), e);
        let l0 = x0.angular_momentum(&Vec3::zeros());
        let tr = integrate_regularized(&m, &x0, &StopCondition::escape(5.0, 30.0, 1e4), &cfg()).unwrap();
        for s in &tr.states {
            prop_assert!((s.angular_momentum(&Vec3::zeros()) - l0).abs() <= 1e-8);
        }
    }
}
