use super::dop853::{attempt, Dense, Y};
use super::{Event, EventKind, IntegratorConfig, Outcome, PhaseState, Segment, StopCondition, Trajectory, Watch};
use crate::potential::PotentialModel;
use crate::quadrature;
use crate::{Error, Result, Vec3};

/// Angular momentum below which an orbit entering the near-collision zone is
/// treated as an exact collision.
const L_COLL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Regularization {
    pub center: Vec3,
    pub strength: f64,
    pub exponent: f64,
    pub order: u32,
    pub r_switch: f64,
    pub c_alpha: f64,
}

impl Regularization {
    fn in_zone(&self, y: &Y) -> bool {
        let r = (q_of(y) - self.center).norm();
        r < self.r_switch && p_of(y).norm_squared() * r.powf(self.exponent) > self.c_alpha * self.strength
    }

    /// Time rescaling factor `dt/dtau = |q - s|^(alpha/2)`.
    fn factor(&self, y: &Y) -> f64 {
        (q_of(y) - self.center).norm().powf(0.5 * self.exponent)
    }
}

fn q_of(y: &Y) -> Vec3 {
    Vec3::new(y[0], y[1], y[2])
}

fn p_of(y: &Y) -> Vec3 {
    Vec3::new(y[3], y[4], y[5])
}

pub(super) fn to_state(y: &Y) -> PhaseState {
    PhaseState { q: q_of(y), p: p_of(y), t: y[6] }
}

fn to_y(x: &PhaseState) -> Y {
    Y::from_column_slice(&[x.q.x, x.q.y, x.q.z, x.p.x, x.p.y, x.p.z, x.t])
}

fn physical_rhs(model: &PotentialModel, y: &Y) -> Y {
    match model.eval(&q_of(y)) {
        Ok((_, g)) => Y::from_column_slice(&[y[3], y[4], y[5], -g.x, -g.y, -g.z, 1.0]),
        Err(_) => Y::repeat(f64::NAN),
    }
}

fn rhs(model: &PotentialModel, reg: Option<&Regularization>, sundman: bool, y: &Y) -> Y {
    let f = physical_rhs(model, y);
    match (reg, sundman) {
        (Some(r), true) => f * r.factor(y),
        _ => f,
    }
}

/// Solve for `s` in a step with `t(s) = t`, given `t(0) = t0`, `t(h) = t1`.
pub(super) fn solve_time(dense: &Dense, t: f64, t0: f64, t1: f64) -> f64 {
    let (a, b) = (dense.s0, dense.s0 + dense.h);
    if t <= t0 {
        return a;
    }
    if t >= t1 {
        return b;
    }
    find_root(|s| dense.eval(s)[6] - t, a, b, t0 - t, t1 - t)
}

/// Illinois-modified regula falsi on a bracketing interval.
fn find_root(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> f64 {
    let tol = 1e-14 * (a.abs() + b.abs()) + 1e-300;
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= tol || ga == 0.0 {
            break;
        }
        if gb == 0.0 {
            return b;
        }
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let gc = g(c);
        if gc == 0.0 {
            return c;
        }
        if (gc > 0.0) == (gb > 0.0) {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    if ga.abs() < gb.abs() {
        a
    } else {
        b
    }
}

pub(super) fn run_with_retries(
    model: &PotentialModel,
    x0: &PhaseState,
    stop: &StopCondition,
    config: &IntegratorConfig,
    reg: Option<Regularization>,
) -> Result<Trajectory> {
    let mut cfg = *config;
    let mut tries = 0;
    loop {
        match Run::new(model, x0, stop, &cfg, reg)?.go() {
            Err(Error::EnergyDriftExceeded { .. }) if tries < cfg.retries => {
                tries += 1;
                cfg.rtol /= 10.0;
                cfg.atol /= 10.0;
            }
            other => return other,
        }
    }
}

struct Run<'a> {
    model: &'a PotentialModel,
    stop: &'a StopCondition,
    cfg: &'a IntegratorConfig,
    reg: Option<Regularization>,
    watches: Vec<Watch>,
    traj: Trajectory,
    escaped: bool,
}

enum StepEvent {
    Pericentre(usize),
    DiskExit(usize),
    Escape,
    Extraction,
    Timeout,
}

impl<'a> Run<'a> {
    fn new(
        model: &'a PotentialModel,
        x0: &PhaseState,
        stop: &'a StopCondition,
        cfg: &'a IntegratorConfig,
        reg: Option<Regularization>,
    ) -> Result<Self> {
        let energy = x0.energy(model)?;
        let mut watches = stop.watches.clone();
        if let Some(r) = &reg {
            if !watches.iter().any(|w| w.center == r.center) {
                watches.push(Watch { center: r.center, radius: None });
            }
        }
        let traj = Trajectory {
            energy,
            states: vec![*x0],
            events: Vec::new(),
            outcome: Outcome::Timeout,
            watch_centers: watches.iter().map(|w| w.center).collect(),
            max_energy_error: 0.0,
            steps: 0,
            segments: Vec::new(),
        };
        Ok(Self { model, stop, cfg, reg, watches, traj, escaped: false })
    }

    fn rhs(&self, sundman: bool, y: &Y) -> Y {
        rhs(self.model, self.reg.as_ref(), sundman, y)
    }

    fn escape_holds(&self, y: &Y) -> bool {
        self.stop.escape.is_some_and(|rule| {
            let q = q_of(y);
            q.norm() >= rule.r_vir && q.dot(&p_of(y)) >= 0.0
        })
    }

    fn push_event(&mut self, kind: EventKind, y: &Y) {
        self.traj.events.push(Event { t: y[6], kind, state: to_state(y) });
    }

    fn initial_step(&self, y: &Y, f0: &Y) -> f64 {
        let sk = |i: usize| self.cfg.atol + self.cfg.rtol * y[i].abs();
        let dnf: f64 = (0..7).map(|i| (f0[i] / sk(i)).powi(2)).sum();
        let dny: f64 = (0..7).map(|i| (y[i] / sk(i)).powi(2)).sum();
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
        h = h.min(self.cfg.h_max);
        let f1 = self.rhs(false, &(y + h * f0));
        let der2 = (0..7).map(|i| ((f1[i] - f0[i]) / sk(i)).powi(2)).sum::<f64>().sqrt() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
        (100.0 * h).min(h1).min(self.cfg.h_max)
    }

    /// Continue an exact collision by the reflection rule.
    fn reflect(&mut self, y: &Y) -> Result<Y> {
        let r = self.reg.expect("reflection needs a singular term");
        let energy = self.traj.energy;
        let rel = q_of(y) - r.center;
        let dist = rel.norm();
        let u = rel / dist;
        // Radial travel time to the center; rho = dist x^2 tames the endpoint.
        let model = self.model;
        let half = quadrature::integrate(
            |x| {
                if x == 0.0 {
                    return 0.0;
                }
                let rho = dist * x * x;
                match model.value(&(r.center + u * rho)) {
                    Ok(v) => 2.0 * dist * x / (2.0 * (energy - v)).max(1e-300).sqrt(),
                    Err(_) => 0.0,
                }
            },
            0.0,
            1.0,
            1e-15,
            1e-13,
            200,
        )
        .value;
        let (q_new, mut p_new) = if r.order % 2 == 1 { (q_of(y), -p_of(y)) } else { (r.center - rel, p_of(y)) };
        let v_new = self.model.value(&q_new)?;
        let speed = (2.0 * (energy - v_new)).max(0.0).sqrt();
        p_new *= speed / p_new.norm();
        let l = rel.cross(&p_of(y)).norm();
        self.traj.events.push(Event {
            t: y[6] + half,
            kind: EventKind::Collision { order: r.order, angular_momentum: l },
            state: to_state(y),
        });
        let after = PhaseState { q: q_new, p: p_new, t: y[6] + 2.0 * half };
        if self.cfg.keep_dense {
            self.traj.segments.push(Segment::Jump { t0: y[6], t1: after.t, before: to_state(y), after });
        }
        self.traj.states.push(after);
        Ok(to_y(&after))
    }

    fn go(mut self) -> Result<Trajectory> {
        let x0 = self.traj.states[0];
        let mut y = to_y(&x0);
        let energy = self.traj.energy;
        let tol_e = self.cfg.energy_tol * (1.0 + energy.abs());

        if self.escape_holds(&y) {
            self.escaped = true;
            self.push_event(EventKind::Escape, &y);
            let rule = self.stop.escape.expect("escape rule present");
            if x0.q.norm() >= rule.r_extract {
                self.push_event(EventKind::Extraction, &y);
                self.traj.outcome = Outcome::Escaped;
                return Ok(self.traj);
            }
        }

        let mut sundman = false;
        let mut k1 = self.rhs(false, &y);
        let mut h = self.initial_step(&y, &k1);
        let mut facold: f64 = 1e-4;
        let mut rejected = false;

        loop {
            if self.traj.steps >= self.cfg.max_steps {
                return Err(Error::StepSizeUnderflow { t: y[6], h });
            }
            let want = self.reg.is_some_and(|r| r.in_zone(&y));
            if want != sundman {
                let g = self.reg.expect("zone implies regularization").factor(&y);
                h = if want { h / g } else { h * g };
                sundman = want;
                k1 = self.rhs(sundman, &y);
            }
            if sundman {
                let r = self.reg.expect("zone implies regularization");
                let rel = q_of(&y) - r.center;
                let p = p_of(&y);
                if rel.cross(&p).norm() < L_COLL && rel.dot(&p) < 0.0 {
                    y = self.reflect(&y)?;
                    k1 = self.rhs(sundman, &y);
                    continue;
                }
            }

            let remaining = self.stop.t_max - y[6];
            let g = if sundman { self.reg.expect("zone").factor(&y) } else { 1.0 };
            h = h.min(self.cfg.h_max / g);
            if !sundman {
                // Never step across a whole bump sitting in flat space.
                if let Some(w) = self.model.feature_length() {
                    h = h.min(0.25 * w / p_of(&y).norm().max(1e-300));
                }
            }
            let to_end = !sundman && h >= remaining;
            if to_end {
                h = remaining;
            }

            let (model, reg) = (self.model, self.reg);
            let f = move |v: &Y| rhs(model, reg.as_ref(), sundman, v);
            let a = attempt(&f, &y, &k1, h, self.cfg.rtol, self.cfg.atol);
            let fac11 = a.err.powf(1.0 / 8.0);
            if a.err > 1.0 {
                h /= if a.err.is_finite() { 3f64.min(fac11 / 0.9) } else { 10.0 };
                rejected = true;
                let moves = (0..7).any(|i| (h * k1[i]).abs() > 1e-15 * (1.0 + y[i].abs()));
                if !moves || h == 0.0 {
                    return Err(Error::StepSizeUnderflow { t: y[6], h });
                }
                continue;
            }

            let mut y_new = a.y_new;
            if to_end {
                y_new[6] = self.stop.t_max;
            }
            if sundman {
                let v = self.model.value(&q_of(&y_new))?;
                let want_speed = (2.0 * (energy - v)).max(0.0).sqrt();
                let speed = p_of(&y_new).norm();
                if speed > 0.0 {
                    for i in 3..6 {
                        y_new[i] *= want_speed / speed;
                    }
                }
            }
            let kinetic = 0.5 * p_of(&y_new).norm_squared();
            let e_err = (to_state(&y_new).energy(self.model)? - energy).abs();
            self.traj.max_energy_error = self.traj.max_energy_error.max(e_err);
            // Rounding floor: near a singular centre both terms are huge.
            if e_err > tol_e + 64.0 * f64::EPSILON * kinetic {
                return Err(Error::EnergyDriftExceeded { drift: e_err, tol: tol_e });
            }
            let f_new = f(&y_new);
            self.traj.steps += 1;

            let mut dense: Option<Dense> = None;
            let get_dense = |dense: &mut Option<Dense>| -> Dense {
                dense.get_or_insert_with(|| Dense::new(&f, &y, &a, &f_new, 0.0, h)).clone()
            };
            if self.cfg.keep_dense {
                get_dense(&mut dense);
            }

            // Collect event roots inside the step, in step-variable order.
            let mut found: Vec<(f64, StepEvent)> = Vec::new();
            for (i, w) in self.watches.iter().enumerate() {
                let radial = |v: &Y| (q_of(v) - w.center).dot(&p_of(v));
                let (g0, g1) = (radial(&y), radial(&y_new));
                if g0 < 0.0 && g1 >= 0.0 {
                    let d = get_dense(&mut dense);
                    found.push((find_root(|s| radial(&d.eval(s)), 0.0, h, g0, g1), StepEvent::Pericentre(i)));
                }
                if let Some(rad) = w.radius {
                    let out = |v: &Y| (q_of(v) - w.center).norm_squared() - rad * rad;
                    let (g0, g1) = (out(&y), out(&y_new));
                    if g0 < 0.0 && g1 >= 0.0 {
                        let d = get_dense(&mut dense);
                        found.push((find_root(|s| out(&d.eval(s)), 0.0, h, g0, g1), StepEvent::DiskExit(i)));
                    }
                }
            }
            if let Some(rule) = self.stop.escape {
                let mut s_escape = None;
                if !self.escaped && self.escape_holds(&y_new) {
                    let mut s_on: f64 = 0.0;
                    let radius = |v: &Y| q_of(v).norm_squared() - rule.r_vir * rule.r_vir;
                    let virial = |v: &Y| q_of(v).dot(&p_of(v));
                    for g in [&radius as &dyn Fn(&Y) -> f64, &virial] {
                        let (g0, g1) = (g(&y), g(&y_new));
                        if g0 < 0.0 {
                            let d = get_dense(&mut dense);
                            s_on = s_on.max(find_root(|s| g(&d.eval(s)), 0.0, h, g0, g1));
                        }
                    }
                    found.push((s_on, StepEvent::Escape));
                    s_escape = Some(s_on);
                }
                if self.escaped || s_escape.is_some() {
                    let ext = |v: &Y| q_of(v).norm_squared() - rule.r_extract * rule.r_extract;
                    let (g0, g1) = (ext(&y), ext(&y_new));
                    if g1 >= 0.0 {
                        let s0 = s_escape.unwrap_or(0.0);
                        let s = if g0 < 0.0 {
                            let d = get_dense(&mut dense);
                            find_root(|s| ext(&d.eval(s)), 0.0, h, g0, g1).max(s0)
                        } else {
                            s0
                        };
                        found.push((s, StepEvent::Extraction));
                    }
                }
            }
            if y_new[6] >= self.stop.t_max {
                let s = if to_end {
                    h
                } else {
                    let d = get_dense(&mut dense);
                    solve_time(&d, self.stop.t_max, y[6], y_new[6])
                };
                found.push((s, StepEvent::Timeout));
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut end: Option<(f64, Outcome)> = None;
            for (s, ev) in found {
                let ys = if s == h {
                    y_new
                } else if s == 0.0 {
                    y
                } else {
                    get_dense(&mut dense).eval(s)
                };
                match ev {
                    StepEvent::Pericentre(i) => {
                        let x = to_state(&ys);
                        let c = self.watches[i].center;
                        let kind = EventKind::Pericentre {
                            center: i,
                            distance: (x.q - c).norm(),
                            angular_momentum: x.angular_momentum(&c),
                        };
                        self.push_event(kind, &ys);
                    }
                    StepEvent::DiskExit(i) => self.push_event(EventKind::DiskExit { center: i }, &ys),
                    StepEvent::Escape => {
                        self.escaped = true;
                        self.push_event(EventKind::Escape, &ys);
                    }
                    StepEvent::Extraction => {
                        self.push_event(EventKind::Extraction, &ys);
                        end = Some((s, Outcome::Escaped));
                        break;
                    }
                    StepEvent::Timeout => {
                        let mut yt = ys;
                        yt[6] = self.stop.t_max;
                        self.push_event(EventKind::Timeout, &yt);
                        end = Some((s, Outcome::Timeout));
                        break;
                    }
                }
            }

            let (s_end, y_end) = match end {
                Some((s, _)) if s < h => (s, get_dense(&mut dense).eval(s)),
                _ => (h, y_new),
            };
            if let (true, Some(d)) = (self.cfg.keep_dense, dense.as_ref()) {
                self.traj.segments.push(Segment::Flow { dense: d.clone(), physical: !sundman, t0: y[6], t1: y_end[6] });
            }
            let _ = s_end;
            self.traj.states.push(to_state(&y_end));
            if let Some((_, outcome)) = end {
                self.traj.outcome = outcome;
                return Ok(self.traj);
            }

            let mut h_new = h / (1.0 / 6.0f64).max(3f64.min(fac11 / 0.9));
            if rejected {
                h_new = h_new.min(h);
            }
            rejected = false;
            facold = facold.max(a.err).max(1e-4);
            y = y_new;
            k1 = f_new;
            h = h_new;
        }
    }
}
