//! Adaptive integration, escape classification, invariant manifolds,
//! periodic orbits and Monte-Carlo sweeps.

mod escape;
mod manifold;
mod shooting;
mod sweep;

pub use escape::*;
pub use manifold::*;
pub use shooting::*;
pub use sweep::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Chart, Clock, VectorField};

/// Tolerances and bounds of one integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Length of the integration interval in the field's clock.
    pub max_time: f64,
    /// Time tolerance of event localization.
    pub event_tol: f64,
    pub max_steps: usize,
    /// Emit samples on a uniform grid from the dense output instead of at accepted steps.
    pub output_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1.0,
            max_time: 100.0,
            event_tol: 1e-12,
            max_steps: 1_000_000,
            output_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("max_time", self.max_time),
            ("event_tol", self.event_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.rel_tol < 1e-14 {
            return Err(Error::InvalidParams(format!(
                "rel_tol must be at least 1e-14, got {}",
                self.rel_tol
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParams("max_steps must be positive".into()));
        }
        if let Some(dt) = self.output_step {
            if !(dt > 0.0) {
                return Err(Error::InvalidParams(format!("output_step must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn with_max_time(mut self, t: f64) -> Self {
        self.max_time = t;
        self
    }

    pub fn with_output_step(mut self, dt: f64) -> Self {
        self.output_step = Some(dt);
        self
    }
}

/// Which sign changes of an event function count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Crossing {
    /// From negative to positive.
    Rising,
    Falling,
    Either,
}

/// A scalar event function `g(x)`; an event fires where `g` changes sign.
pub struct EventSpec<'a, const N: usize> {
    pub name: String,
    pub crossing: Crossing,
    pub terminal: bool,
    func: Box<dyn Fn(&[f64; N]) -> f64 + Sync + 'a>,
}

impl<'a, const N: usize> EventSpec<'a, N> {
    pub fn new(
        name: impl Into<String>,
        crossing: Crossing,
        terminal: bool,
        func: impl Fn(&[f64; N]) -> f64 + Sync + 'a,
    ) -> Self {
        EventSpec {
            name: name.into(),
            crossing,
            terminal,
            func: Box::new(func),
        }
    }

    pub fn value(&self, x: &[f64; N]) -> f64 {
        (self.func)(x)
    }

    fn fires(&self, g0: f64, g1: f64) -> bool {
        if g0 == 0.0 || g0.is_nan() || g1.is_nan() {
            return false;
        }
        let rising = g0 < 0.0 && g1 >= 0.0;
        let falling = g0 > 0.0 && g1 <= 0.0;
        match self.crossing {
            Crossing::Rising => rising,
            Crossing::Falling => falling,
            Crossing::Either => rising || falling,
        }
    }
}

/// Why an integration stopped, or which event was crossed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Crossing(String),
    MaxTime,
    MaxSteps,
    StepUnderflow(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub state: Vec<f64>,
}

impl Event {
    pub fn is_crossing(&self, name: &str) -> bool {
        matches!(&self.kind, EventKind::Crossing(n) if n == name)
    }

    pub fn label(&self) -> String {
        match &self.kind {
            EventKind::Crossing(n) => n.clone(),
            EventKind::MaxTime => "max_time".into(),
            EventKind::MaxSteps => "max_steps".into(),
            EventKind::StepUnderflow(_) => "step_underflow".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<const N: usize> {
    pub time: f64,
    pub state: [f64; N],
    pub energy_residual: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// A sampled orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub chart: Chart,
    pub clock: Clock,
    pub samples: Vec<Sample<N>>,
    /// Non-terminal event crossings in time order.
    pub events: Vec<Event>,
    pub terminal_event: Option<Event>,
    pub stats: StepStats,
}

impl<const N: usize> Trajectory<N> {
    pub fn first(&self) -> &Sample<N> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<N> {
        self.samples.last().expect("trajectories hold at least one sample")
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.energy_residual))
    }

    pub fn ended_by(&self, name: &str) -> bool {
        self.terminal_event.as_ref().is_some_and(|e| e.is_crossing(name))
    }

    /// Crossings of the named event, including a terminal one.
    pub fn crossings(&self, name: &str) -> Vec<&Event> {
        self.events
            .iter()
            .chain(self.terminal_event.iter())
            .filter(|e| e.is_crossing(name))
            .collect()
    }

    /// Physical time at every sample by trapezoidal quadrature of `dt/dclock`.
    pub fn physical_times(&self, rate: impl Fn(&[f64; N]) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.samples.len());
        let mut t = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for s in &self.samples {
            let r = rate(&s.state);
            if let Some((tp, rp)) = prev {
                t += 0.5 * (s.time - tp) * (r + rp);
            }
            out.push(t);
            prev = Some((s.time, r));
        }
        out
    }

    /// Flip the sign of time, for trajectories of a [`crate::field::Reversed`] field.
    pub fn negate_time(mut self) -> Self {
        for s in &mut self.samples {
            s.time = -s.time;
        }
        for e in self.events.iter_mut().chain(self.terminal_event.iter_mut()) {
            e.time = -e.time;
        }
        self
    }
}

// Dormand-Prince 5(4) tableau; the field is autonomous so the nodes are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension of one accepted step.
struct Dense<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> Dense<N> {
    fn at(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.r;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn finite<const N: usize>(x: &[f64; N]) -> bool {
    x.iter().all(|v| v.is_finite())
}

struct Stepper<'f, const N: usize, F: ?Sized> {
    field: &'f F,
    evals: usize,
}

impl<const N: usize, F: VectorField<N> + ?Sized> Stepper<'_, N, F> {
    fn f(&mut self, x: &[f64; N]) -> Result<[f64; N]> {
        self.evals += 1;
        let d = self.field.eval(x)?;
        if finite(&d) {
            Ok(d)
        } else {
            Err(Error::Domain(format!("non-finite field value at {x:?}")))
        }
    }

    /// One trial step; returns the new state, its derivative, the error
    /// estimate and the dense-output coefficients.
    #[allow(clippy::type_complexity)]
    fn step(
        &mut self,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> Result<([f64; N], [f64; N], [f64; N], Dense<N>)> {
        let k2 = self.f(&combine(y, h, &[(A21, k1)]))?;
        let k3 = self.f(&combine(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = self.f(&combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = self.f(&combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = self.f(&combine(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ))?;
        let y1 = combine(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        if !finite(&y1) {
            return Err(Error::Domain("non-finite trial state".into()));
        }
        let k7 = self.f(&y1)?;
        let mut err = [0.0; N];
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Ok((y1, k7, err, Dense { t0: t, h, r }))
    }
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], cfg: &IntegratorConfig) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

/// Bisection on the dense output for a sign change of `g` in `(lo, hi]`.
fn locate<const N: usize>(ev: &EventSpec<'_, N>, dense: &Dense<N>, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut glo = ev.value(&dense.at(lo));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = ev.value(&dense.at(mid));
        if ev.fires(glo, gm) || gm == 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    hi
}

/// Integrate `x' = f(x)` from `state` at time zero.
///
/// Rejected trial steps (error too large, or a stage outside the field's
/// domain) shrink the step. The run ends at the first terminal event, at
/// `max_time`, after `max_steps`, or when the step underflows; the reason is
/// stored as the terminal event.
pub fn integrate<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    state: &[f64; N],
    config: &IntegratorConfig,
    events: &[EventSpec<'_, N>],
) -> Result<Trajectory<N>> {
    config.validate()?;
    let mut st = Stepper { field, evals: 0 };
    let mut k1 = st.f(state)?;
    let mut y = *state;
    let mut t = 0.0;
    let mut traj = Trajectory {
        chart: field.chart(),
        clock: field.clock(),
        samples: vec![Sample {
            time: 0.0,
            state: y,
            energy_residual: field.energy_residual(&y),
        }],
        events: Vec::new(),
        terminal_event: None,
        stats: StepStats::default(),
    };
    let mut g: Vec<f64> = events.iter().map(|e| e.value(&y)).collect();
    let mut h = initial_step(&mut st, &y, &k1, config);
    let mut next_out = config.output_step;
    let mut last_rejected = false;
    let finish = |traj: &mut Trajectory<N>, kind: EventKind, t: f64, y: &[f64; N], st: &Stepper<'_, N, F>| {
        if traj.last().time < t {
            traj.samples.push(Sample {
                time: t,
                state: *y,
                energy_residual: field.energy_residual(y),
            });
        }
        traj.terminal_event = Some(Event {
            kind,
            time: t,
            state: y.to_vec(),
        });
        traj.stats.evaluations = st.evals;
    };

    loop {
        if t >= config.max_time {
            finish(&mut traj, EventKind::MaxTime, t, &y, &st);
            return Ok(traj);
        }
        if traj.stats.accepted >= config.max_steps {
            finish(&mut traj, EventKind::MaxSteps, t, &y, &st);
            return Ok(traj);
        }
        h = h.min(config.max_step).min(config.max_time - t);
        if h < 1e-14 * t.abs().max(1.0) {
            finish(
                &mut traj,
                EventKind::StepUnderflow(format!("step {h:e} at t = {t}")),
                t,
                &y,
                &st,
            );
            return Ok(traj);
        }
        let trial = st.step(t, &y, &k1, h);
        let (y1, k7, err, dense) = match trial {
            Ok(v) => v,
            Err(_) => {
                traj.stats.rejected += 1;
                h *= 0.25;
                last_rejected = true;
                continue;
            }
        };
        let en = error_norm(&err, &y, &y1, config);
        if !(en <= 1.0) {
            traj.stats.rejected += 1;
            let fac = if en.is_finite() {
                (0.9 * en.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.25
            };
            h *= fac;
            last_rejected = true;
            continue;
        }
        let t1 = if config.max_time - (t + h) < 1e-14 * config.max_time {
            config.max_time
        } else {
            t + h
        };
        traj.stats.accepted += 1;

        // crossings in (t, t1]; those after the first terminal one are dropped
        let g1: Vec<f64> = events.iter().map(|e| e.value(&y1)).collect();
        let mut crossings: Vec<(usize, f64)> = Vec::new();
        for (k, ev) in events.iter().enumerate() {
            if ev.fires(g[k], g1[k]) {
                crossings.push((k, locate(ev, &dense, t, t1, config.event_tol)));
            }
        }
        crossings.sort_by(|a, b| a.1.total_cmp(&b.1));
        let stop = crossings.iter().find(|(k, _)| events[*k].terminal).copied();
        let t_end = stop.map_or(t1, |(_, te)| te);
        if let Some(dt) = config.output_step {
            while let Some(to) = next_out {
                if to > t_end {
                    break;
                }
                let x = dense.at(to);
                traj.samples.push(Sample {
                    time: to,
                    state: x,
                    energy_residual: field.energy_residual(&x),
                });
                next_out = Some(to + dt);
            }
        }
        for &(k, te) in crossings.iter().filter(|(_, te)| *te <= t_end) {
            if Some((k, te)) == stop {
                break;
            }
            traj.events.push(Event {
                kind: EventKind::Crossing(events[k].name.clone()),
                time: te,
                state: dense.at(te).to_vec(),
            });
        }
        if let Some((k, te)) = stop {
            let x = dense.at(te);
            finish(&mut traj, EventKind::Crossing(events[k].name.clone()), te, &x, &st);
            return Ok(traj);
        }
        if config.output_step.is_none() {
            traj.samples.push(Sample {
                time: t1,
                state: y1,
                energy_residual: field.energy_residual(&y1),
            });
        }
        t = t1;
        y = y1;
        k1 = k7;
        g = g1;
        let mut fac = (0.9 * en.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h *= fac;
    }
}

fn initial_step<const N: usize, F: VectorField<N> + ?Sized>(
    st: &mut Stepper<'_, N, F>,
    y: &[f64; N],
    f0: &[f64; N],
    cfg: &IntegratorConfig,
) -> f64 {
    let norm = |v: &[f64; N]| {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs();
            acc += (v[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    };
    let (d0, d1) = (norm(y), norm(f0));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step).min(cfg.max_time);
    let y1 = combine(y, h0, &[(1.0, f0)]);
    let Ok(f1) = st.f(&y1) else {
        return h0;
    };
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
