use super::*;
use crate::dynamics::{integrate, IntegratorConfig, PhaseState, StopCondition};
use crate::geometry::planar;
use crate::potential::PotentialTerm;

fn disks(centers: &[(f64, f64)], radius: f64) -> Vec<Support> {
    centers.iter().map(|&(x, y)| Support { center: planar(x, y), radius }).collect()
}

fn bumps(centers: &[(f64, f64)]) -> PotentialModel {
    PotentialModel::new(2, centers.iter().map(|&(x, y)| PotentialTerm::gaussian(2.0, 1.0, planar(x, y))).collect())
        .unwrap()
}

fn triangle(side: f64) -> Vec<(f64, f64)> {
    let r = side / 3f64.sqrt();
    (0..3)
        .map(|i| {
            let a = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * i as f64 / 3.0;
            (r * a.cos(), r * a.sin())
        })
        .collect()
}

/// Distance from a disk center to every sampled line through two other disks.
fn brute_force_shadowing(s: &[Support]) -> bool {
    let k = s.len();
    let steps = 400;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            for a in 0..steps {
                for b in 0..steps {
                    let pa = s[i].center
                        + crate::geometry::unit_at(a as f64 * std::f64::consts::TAU / steps as f64) * s[i].radius;
                    let pb = s[j].center
                        + crate::geometry::unit_at(b as f64 * std::f64::consts::TAU / steps as f64) * s[j].radius;
                    let dir = (pb - pa).normalize();
                    for (m, c) in s.iter().enumerate() {
                        if m != i && m != j {
                            let rel = c.center - pa;
                            if (rel - dir * rel.dot(&dir)).norm() < c.radius {
                                return true;
                            }
                        }
                    }
                }
            }
        }
    }
    false
}

#[test]
fn shadowing_examples() {
    let tri = disks(&triangle(10.0), 1.0);
    assert!(check_nonshadowing(&tri).passed);
    assert!(!brute_force_shadowing(&tri));
    let line = disks(&[(-5.0, 0.0), (0.0, 0.0), (5.0, 0.0)], 1.0);
    assert_eq!(check_nonshadowing(&line).violation, Some([1, 2, 3]));
    let pair = disks(&[(0.0, 0.0), (0.5, 0.0)], 3.0);
    assert!(check_nonshadowing(&pair).passed);
    // Fat disks on a triangle do shadow each other.
    let fat = disks(&triangle(10.0), 4.5);
    assert!(!check_nonshadowing(&fat).passed);
    assert!(brute_force_shadowing(&fat));
}

#[test]
fn tangent_lines_agree_with_sampled_lines() {
    for (side, radius) in [(12.0, 3.0), (10.0, 4.2), (10.0, 4.4), (20.0, 9.0)] {
        let s = disks(&triangle(side), radius);
        assert_eq!(check_nonshadowing(&s).passed, !brute_force_shadowing(&s), "side {side} radius {radius}");
    }
}

#[test]
fn itineraries_reject_repeats() {
    assert!(Itinerary::new(vec![1, 1, 2], 2).is_err());
    assert!(Itinerary::new(vec![1, 3], 2).is_err());
    assert!(Itinerary::new(vec![], 2).is_err());
    assert!(Itinerary::new(vec![1, 2, 1], 2).is_ok());
    let words = Itinerary::all_words(3, 5);
    assert_eq!(words.len(), 48);
    assert!(words.iter().all(|w| w.symbols().windows(2).all(|p| p[0] != p[1])));
}

#[test]
fn visit_logs() {
    let m = bumps(&[(0.0, 0.0), (20.0, 0.0)]);
    let supports = effective_supports(&m, 1.0);
    let mut stop = StopCondition::until(60.0);
    stop.watches = support_watches(&supports);
    let cfg = IntegratorConfig::default();
    let miss = PhaseState::new(planar(-20.0, 8.0), planar(2f64.sqrt(), 0.0), 0.0);
    let tr = integrate(&m, &miss, &stop, &cfg).unwrap();
    assert!(visit_log(&tr, &supports).is_empty());
    let v = m.value(&planar(-20.0, 0.0)).unwrap();
    let head_on = PhaseState::new(planar(-20.0, 0.0), planar((2.0 * (1.0 - v)).sqrt(), 0.0), 0.0);
    let tr = integrate(&m, &head_on, &stop, &cfg).unwrap();
    let log = visit_log(&tr, &supports);
    assert_eq!(log.iter().map(|v| v.center).collect::<Vec<_>>(), vec![1]);
    // Turning point of 2 exp(-r^2) = 1.
    assert!((log[0].distance - 2f64.ln().sqrt()).abs() < 1e-6);
}

#[test]
fn two_bump_itinerary() {
    let m = bumps(&[(-5.0, 0.0), (5.0, 0.0)]);
    let opts = RealizeOptions { theta: planar(0.0, 1.0), ..Default::default() };
    let it = Itinerary::new(vec![1, 2], 2).unwrap();
    let w = realize_itinerary(&m, 1.0, &it, &opts).unwrap();
    assert_eq!(w.visit_log.iter().map(|v| v.center).collect::<Vec<_>>(), vec![1, 2]);
    for v in &w.visit_log {
        assert!(v.distance <= 3.0);
    }
}

#[test]
fn triangle_itineraries_nest() {
    let m = bumps(&triangle(12.0));
    let opts = RealizeOptions::default();
    let short = realize_itinerary(&m, 1.0, &Itinerary::new(vec![1, 2, 1], 3).unwrap(), &opts).unwrap();
    assert_eq!(short.visit_log.iter().map(|v| v.center).collect::<Vec<_>>(), vec![1, 2, 1]);
    let long = realize_itinerary(&m, 1.0, &Itinerary::new(vec![1, 2, 1, 3], 3).unwrap(), &opts).unwrap();
    assert_eq!(long.visit_log.iter().map(|v| v.center).collect::<Vec<_>>(), vec![1, 2, 1, 3]);
    assert_eq!(short.theta, long.theta);
    for (outer, inner) in short.intervals.iter().zip(&long.intervals) {
        assert!(inner[0] >= outer[0] - 1e-12 && inner[1] <= outer[1] + 1e-12, "{outer:?} {inner:?}");
    }
    for pair in long.intervals.windows(2) {
        assert!(pair[1][0] >= pair[0][0] && pair[1][1] <= pair[0][1]);
        assert!(pair[1][1] - pair[1][0] < pair[0][1] - pair[0][0]);
    }
}

#[test]
fn witness_survives_tighter_tolerance() {
    let m = bumps(&triangle(12.0));
    let opts = RealizeOptions::default();
    let it = Itinerary::new(vec![2, 3, 1], 3).unwrap();
    let w = realize_itinerary(&m, 1.0, &it, &opts).unwrap();
    let tight = crate::scattering::ScatterOptions {
        integrator: IntegratorConfig { rtol: 1e-13, atol: 1e-13, ..Default::default() },
        ..Default::default()
    };
    let sc = crate::scattering::Scatterer::new(&m, 1.0, &tight).unwrap();
    let supports = effective_supports(&m, 1.0);
    let theta = planar(w.theta[0], w.theta[1]);
    let tr = sc.trajectory(&theta, &(crate::geometry::rot90(&theta) * w.b), &support_watches(&supports)).unwrap();
    assert_eq!(visit_log(&tr, &supports).iter().map(|v| v.center).collect::<Vec<_>>(), vec![2, 3, 1]);
}

#[test]
fn shadowed_models_are_rejected() {
    let m = bumps(&[(-5.0, 0.0), (0.0, 0.0), (5.0, 0.0)]);
    let it = Itinerary::new(vec![1, 2], 3).unwrap();
    assert!(matches!(realize_itinerary(&m, 1.0, &it, &RealizeOptions::default()), Err(Error::ShadowingViolation(_))));
}

proptest::proptest! {
    #[test]
    fn words_are_admissible_exactly_when_neighbours_differ(
        symbols in proptest::collection::vec(0usize..6, 1..8), centers in 2usize..6,
    ) {
        let ok = symbols.iter().all(|&s| (1..=centers).contains(&s)) && symbols.windows(2).all(|w| w[0] != w[1]);
        proptest::prop_assert_eq!(Itinerary::new(symbols, centers).is_ok(), ok);
    }

    #[test]
    fn word_count_grows_geometrically(centers in 2usize..5, len in 1usize..6) {
        let words = Itinerary::all_words(centers, len);
        proptest::prop_assert_eq!(words.len(), centers * (centers - 1).pow(len as u32 - 1));
        proptest::prop_assert!(words.iter().all(|w| Itinerary::new(w.symbols().to_vec(), centers).is_ok()));
    }
}
