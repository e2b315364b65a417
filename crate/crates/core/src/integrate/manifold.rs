//! Invariant manifolds of hyperbolic equilibria.

use serde::{Deserialize, Serialize};

use super::{integrate, Event, EventSpec, IntegratorConfig, Sample, StepStats, Trajectory};
use crate::analysis::{classify_P, heteroclinic_constants, real_eigenvector, EquilibriumReport, HYPERBOLICITY_TOL};
use crate::dynamics::ReducedFlow;
use crate::error::{Error, Result};
use crate::field::{Reversed, VectorField};
use crate::shape::ShapePotentials;

/// Distance of a manifold seed from its equilibrium.
pub const MANIFOLD_SEED_OFFSET: f64 = 1e-7;

/// Real eigenvalues of the given sign (`+1` unstable, `-1` stable) with unit eigenvectors.
pub fn real_eigendirections(report: &EquilibriumReport, sign: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    if !report.is_hyperbolic() {
        return Err(Error::Analysis(format!(
            "equilibrium at {:?} is not hyperbolic: {:?}",
            report.location, report.eigenvalues
        )));
    }
    let mut out = Vec::new();
    for e in &report.eigenvalues {
        if e[1].abs() <= HYPERBOLICITY_TOL && e[0] * sign > HYPERBOLICITY_TOL {
            out.push((e[0], real_eigenvector(&report.jacobian, e[0])?));
        }
    }
    Ok(out)
}

fn seed<const N: usize>(report: &EquilibriumReport, sign: f64, hint: &[f64; N]) -> Result<[f64; N]> {
    if report.location.len() != N {
        return Err(Error::Analysis(format!(
            "equilibrium has {} coordinates, expected {N}",
            report.location.len()
        )));
    }
    let dirs = real_eigendirections(report, sign)?;
    let dot = |v: &[f64]| v.iter().zip(hint).map(|(a, b)| a * b).sum::<f64>();
    let (_, v) = dirs
        .iter()
        .max_by(|a, b| dot(&a.1).abs().total_cmp(&dot(&b.1).abs()))
        .ok_or_else(|| Error::Analysis("no real eigendirection of the requested type".into()))?;
    let d = dot(v);
    if d == 0.0 {
        return Err(Error::Analysis(
            "direction hint is orthogonal to every eigendirection".into(),
        ));
    }
    let mut x = [0.0; N];
    for i in 0..N {
        x[i] = report.location[i] + MANIFOLD_SEED_OFFSET * d.signum() * v[i];
    }
    Ok(x)
}

/// Orbit of the unstable manifold branch leaving along the real unstable
/// eigenvector most aligned with `hint` (signed to agree with it).
pub fn trace_unstable_manifold<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    report: &EquilibriumReport,
    hint: &[f64; N],
    config: &IntegratorConfig,
    events: &[EventSpec<'_, N>],
) -> Result<Trajectory<N>> {
    let x0 = seed(report, 1.0, hint)?;
    integrate(field, &x0, config, events)
}

/// Backward orbit of a stable manifold branch; sample times are negative.
pub fn trace_stable_manifold<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    report: &EquilibriumReport,
    hint: &[f64; N],
    config: &IntegratorConfig,
    events: &[EventSpec<'_, N>],
) -> Result<Trajectory<N>> {
    let x0 = seed(report, -1.0, hint)?;
    Ok(integrate(&Reversed(field), &x0, config, events)?.negate_time())
}

/// Traced heteroclinic from `P-` to `P+` compared with its closed form.
#[derive(Debug, Clone)]
pub struct HeteroclinicTrace {
    /// Sample times are closed-form `sigma` values.
    pub trajectory: Trajectory<3>,
    /// Closed-form time of the seed.
    pub sigma_seed: f64,
    pub summary: HeteroclinicSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicSummary {
    /// Sup over samples of the distance to `(y(sigma), 0, 0)`.
    pub sup_error: f64,
    /// Distance to `P+` at the end of the trace.
    pub terminal_distance: f64,
    pub sigma_start: f64,
    pub sigma_end: f64,
}

/// Trace `W^u(P-)` along `+y` with the reduced field over `[sigma_start, sigma_end]`
/// (backward from the seed, then forward) and measure its deviation from the
/// closed form. Needs mass-symmetric parameters.
pub fn trace_heteroclinic(
    pot: &ShapePotentials,
    sigma_start: f64,
    sigma_end: f64,
    config: &IntegratorConfig,
) -> Result<HeteroclinicTrace> {
    let (amp, k) = heteroclinic_constants(pot)?;
    let rep = classify_P(pot)?;
    let field = ReducedFlow { pot };
    let x0 = seed(&rep.minus, 1.0, &[1.0, 0.0, 0.0])?;
    let sigma_seed = (x0[0] / amp).atanh() / k;
    if !(sigma_start < sigma_seed && sigma_seed < sigma_end) {
        return Err(Error::Analysis(format!(
            "interval [{sigma_start}, {sigma_end}] must contain the seed time {sigma_seed}"
        )));
    }
    let fwd = integrate(
        &field,
        &x0,
        &IntegratorConfig {
            max_time: sigma_end - sigma_seed,
            ..config.clone()
        },
        &[],
    )?;
    let bwd = integrate(
        &Reversed(&field),
        &x0,
        &IntegratorConfig {
            max_time: sigma_seed - sigma_start,
            ..config.clone()
        },
        &[],
    )?;
    let mut samples: Vec<_> = bwd
        .samples
        .iter()
        .skip(1)
        .rev()
        .map(|s| Sample {
            time: sigma_seed - s.time,
            ..*s
        })
        .collect();
    samples.extend(fwd.samples.iter().map(|s| Sample {
        time: sigma_seed + s.time,
        ..*s
    }));
    let mut sup_error: f64 = 0.0;
    for s in &samples {
        let y = amp * (k * s.time).tanh();
        let d = ((s.state[0] - y).powi(2) + s.state[1].powi(2) + s.state[2].powi(2)).sqrt();
        sup_error = sup_error.max(d);
    }
    let end = samples.last().expect("nonempty").state;
    let p = &rep.plus.location;
    let terminal_distance = ((end[0] - p[0]).powi(2) + (end[1] - p[1]).powi(2) + (end[2] - p[2]).powi(2)).sqrt();
    let stats = StepStats {
        accepted: fwd.stats.accepted + bwd.stats.accepted,
        rejected: fwd.stats.rejected + bwd.stats.rejected,
        evaluations: fwd.stats.evaluations + bwd.stats.evaluations,
    };
    let summary = HeteroclinicSummary {
        sup_error,
        terminal_distance,
        sigma_start: samples[0].time,
        sigma_end: samples.last().expect("nonempty").time,
    };
    Ok(HeteroclinicTrace {
        trajectory: Trajectory {
            chart: fwd.chart,
            clock: fwd.clock,
            samples,
            events: Vec::new(),
            terminal_event: fwd.terminal_event.map(|e| Event {
                time: e.time + sigma_seed,
                ..e
            }),
            stats,
        },
        sigma_seed,
        summary,
    })
}
