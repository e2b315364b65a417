//! Poincaré sections and periodic-orbit shooting.

use serde::{Deserialize, Serialize};

use super::{integrate, Crossing, EventSpec, IntegratorConfig};
use crate::analysis::eigen_small;
use crate::dynamics::ReducedFlow;
use crate::error::{domain, Error, Result};
use crate::field::VectorField;
use crate::shape::ShapePotentials;

const SECTION_EVENT: &str = "section";

/// The hyperplane `x[index] = value`, crossed in the given direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub index: usize,
    pub value: f64,
    pub crossing: Crossing,
}

impl Section {
    /// `{s = 0, w > 0}` of the reduced chart: `s' = phi^(a/2) w / lambda` is positive there.
    pub fn reduced_symmetric() -> Self {
        Section {
            index: 1,
            value: 0.0,
            crossing: Crossing::Rising,
        }
    }
}

/// First return to the section with the right crossing direction; returns the
/// state there and the elapsed time.
pub fn poincare_return<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    section: &Section,
    state: &[f64; N],
    config: &IntegratorConfig,
) -> Result<([f64; N], f64)> {
    if section.index >= N {
        return domain(format!("section index {} out of range", section.index));
    }
    if (state[section.index] - section.value).abs() > 1e-8 * (1.0 + section.value.abs()) {
        return domain(format!("state {state:?} is not on the section"));
    }
    let rate = field.eval(state)?[section.index];
    let transversal = match section.crossing {
        Crossing::Rising => rate > 0.0,
        Crossing::Falling => rate < 0.0,
        Crossing::Either => rate != 0.0,
    };
    if !transversal {
        return domain(format!(
            "section is not crossed in the requested direction at {state:?}"
        ));
    }
    let idx = section.index;
    let val = section.value;
    let ev = EventSpec::new(SECTION_EVENT, section.crossing, true, move |x: &[f64; N]| x[idx] - val);
    let tr = integrate(field, state, config, std::slice::from_ref(&ev))?;
    match &tr.terminal_event {
        Some(e) if e.is_crossing(SECTION_EVENT) => {
            let mut x = [0.0; N];
            x.copy_from_slice(&e.state);
            x[idx] = val;
            Ok((x, e.time))
        }
        Some(e) => Err(Error::Integration(format!("no return to the section ({})", e.label()))),
        None => Err(Error::Integration("no return to the section".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    /// Target for the max-norm of the return displacement.
    pub tol: f64,
    pub max_iter: usize,
    /// Finite-difference step of the return-map Jacobian.
    pub fd_step: f64,
    pub integrator: IntegratorConfig,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            tol: 1e-8,
            max_iter: 40,
            fd_step: 1e-6,
            integrator: IntegratorConfig {
                rel_tol: 1e-12,
                abs_tol: 1e-13,
                max_step: 0.05,
                max_time: 50.0,
                event_tol: 1e-13,
                ..IntegratorConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub state: Vec<f64>,
    pub period: f64,
    /// Eigenvalues `(re, im)` of the linearized return map.
    pub multipliers: Vec<[f64; 2]>,
    pub residual_history: Vec<f64>,
}

/// Fixed point of the return map restricted to the two coordinates `free`
/// (all other coordinates held at their seed values), by damped Newton with a
/// forward-difference Jacobian.
pub fn shoot_periodic_orbit<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    section: &Section,
    free: [usize; 2],
    seed: &[f64; N],
    config: &ShootingConfig,
) -> Result<PeriodicOrbit> {
    let embed = |z: [f64; 2]| {
        let mut x = *seed;
        x[free[0]] = z[0];
        x[free[1]] = z[1];
        x
    };
    let disp = |z: [f64; 2]| -> Result<([f64; 2], f64)> {
        let (x1, t) = poincare_return(field, section, &embed(z), &config.integrator)?;
        Ok(([x1[free[0]] - z[0], x1[free[1]] - z[1]], t))
    };
    let norm = |d: [f64; 2]| d[0].abs().max(d[1].abs());
    let mut z = [seed[free[0]], seed[free[1]]];
    let mut history = Vec::new();
    let fail = |message: String, history: &Vec<f64>| Error::Convergence {
        message,
        history: history.clone(),
    };
    let (mut d, mut period) = disp(z).map_err(|e| fail(format!("seed has no return: {e}"), &history))?;
    history.push(norm(d));
    let jac = |z: [f64; 2], d: [f64; 2]| -> Result<[[f64; 2]; 2]> {
        let mut j = [[0.0; 2]; 2];
        for c in 0..2 {
            let hstep = config.fd_step * (1.0 + z[c].abs());
            let mut zp = z;
            zp[c] += hstep;
            let (dp, _) = disp(zp)?;
            for r in 0..2 {
                j[r][c] = (dp[r] - d[r]) / hstep;
            }
        }
        Ok(j)
    };
    for _ in 0..config.max_iter {
        if norm(d) < config.tol {
            break;
        }
        let j = jac(z, d).map_err(|e| fail(format!("Jacobian failed: {e}"), &history))?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(fail("singular return-map Jacobian".into(), &history));
        }
        let step = [
            -(j[1][1] * d[0] - j[0][1] * d[1]) / det,
            -(-j[1][0] * d[0] + j[0][0] * d[1]) / det,
        ];
        let mut damping = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let zt = [z[0] + damping * step[0], z[1] + damping * step[1]];
            if let Ok((dt, pt)) = disp(zt) {
                if norm(dt) < norm(d) {
                    accepted = Some((zt, dt, pt));
                    break;
                }
            }
            damping *= 0.5;
        }
        let Some((zt, dt, pt)) = accepted else {
            return Err(fail(
                "damped Newton step did not reduce the displacement".into(),
                &history,
            ));
        };
        z = zt;
        d = dt;
        period = pt;
        history.push(norm(d));
    }
    if !(norm(d) < config.tol) {
        return Err(fail(
            format!("no convergence in {} iterations", config.max_iter),
            &history,
        ));
    }
    let j = jac(z, d).map_err(|e| fail(format!("Jacobian failed: {e}"), &history))?;
    let dp = vec![vec![j[0][0] + 1.0, j[0][1]], vec![j[1][0], j[1][1] + 1.0]];
    let multipliers = eigen_small(&dp)?.iter().map(|m| [m.re, m.im]).collect();
    Ok(PeriodicOrbit {
        state: embed(z).to_vec(),
        period,
        multipliers,
        residual_history: history,
    })
}

/// Periodic orbit of the reduced zero-energy flow through `(y0, 0, w0)` on the
/// section `{s = 0, w > 0}`.
pub fn find_periodic_orbit(pot: &ShapePotentials, seed: (f64, f64), config: &ShootingConfig) -> Result<PeriodicOrbit> {
    if !pot.params.is_mass_symmetric() {
        return domain("periodic-orbit shooting on s = 0 needs mass-symmetric parameters");
    }
    let field = ReducedFlow { pot };
    shoot_periodic_orbit(
        &field,
        &Section::reduced_symmetric(),
        [0, 2],
        &[seed.0, 0.0, seed.1],
        config,
    )
}
