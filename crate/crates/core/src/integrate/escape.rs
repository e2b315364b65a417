//! Escape classification.

use serde::{Deserialize, Serialize};

use super::{Crossing, EventSpec, Trajectory};
use crate::analysis::equilibria_h0;
use crate::dynamics::{
    lift_reduced, positive_to_cartesian, slave_R, zero_energy_to_cartesian, PositiveEnergyState, ZeroEnergyState,
};
use crate::error::{domain, Result};
use crate::field::Chart;
use crate::model::{CartesianState, Pair, SystemParams};
use crate::shape::ShapePotentials;

/// Name of the terminal event `R < R_esc`.
pub const EVENT_ESCAPE_RADIUS: &str = "escape_radius";
/// Name of the terminal event for a receding bound pair.
pub const EVENT_BINARY: &str = "binary";
/// Name of the terminal event `|s| > 1 - s_margin` on an infinity chart.
pub const EVENT_EDGE: &str = "edge";

/// A bound pair counts as escaped once the third particle is this many pair
/// separations away from the pair's centre of mass.
pub const BINARY_SEPARATION_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EscapeKind {
    /// Pair 12 bound, `s -> -1`.
    TwoPlusOneLeft,
    /// Pair 23 bound, `s -> +1`.
    TwoPlusOneRight,
    /// All three mutual distances grow, `|s_inf| < 1`.
    OneOneOne,
    Undetermined,
}

impl EscapeKind {
    pub const ALL: [EscapeKind; 4] = [
        EscapeKind::TwoPlusOneLeft,
        EscapeKind::TwoPlusOneRight,
        EscapeKind::OneOneOne,
        EscapeKind::Undetermined,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EscapeKind::TwoPlusOneLeft => "2+1_left",
            EscapeKind::TwoPlusOneRight => "2+1_right",
            EscapeKind::OneOneOne => "1+1+1",
            EscapeKind::Undetermined => "undetermined",
        }
    }

    pub fn is_two_plus_one(self) -> bool {
        matches!(self, EscapeKind::TwoPlusOneLeft | EscapeKind::TwoPlusOneRight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeClass {
    pub kind: EscapeKind,
    /// Shape coordinate at termination.
    pub asymptotic_s: f64,
    /// Radial velocity coordinate (`y` or `vt`) at termination.
    pub asymptotic_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeThresholds {
    pub r_esc: f64,
    pub s_margin: f64,
    /// Proximity to `P+-` or `N_h+-`.
    pub delta: f64,
}

impl Default for EscapeThresholds {
    fn default() -> Self {
        EscapeThresholds {
            r_esc: 1e-6,
            s_margin: 1e-3,
            delta: 1e-3,
        }
    }
}

impl EscapeThresholds {
    pub fn scaled(&self, r_factor: f64, s_factor: f64) -> Self {
        EscapeThresholds {
            r_esc: self.r_esc * r_factor,
            s_margin: self.s_margin * s_factor,
            delta: self.delta,
        }
    }
}

/// `(s, y, w)` of a state in a regularized chart, with `(vt, ut)` in place of
/// `(y, w)` on the positive-energy charts.
pub fn chart_shape(chart: Chart, x: &[f64]) -> Result<(f64, f64, f64)> {
    match (chart, x.len()) {
        (Chart::ZeroEnergy | Chart::PositiveEnergy, 4) => Ok((x[2], x[1], x[3])),
        (Chart::Reduced | Chart::InfinityZero | Chart::InfinityPositive, 3) => Ok((x[1], x[0], x[2])),
        _ => domain(format!(
            "no shape coordinates for {chart:?} with {} components",
            x.len()
        )),
    }
}

/// The compactified radius `R` or `Rt` (slaved on the reduced chart, zero on the infinity charts).
pub fn chart_radius(chart: Chart, x: &[f64], pot: &ShapePotentials) -> Result<f64> {
    match (chart, x.len()) {
        (Chart::ZeroEnergy | Chart::PositiveEnergy, 4) => Ok(x[0]),
        (Chart::Reduced, 3) => slave_R(&[x[0], x[1], x[2]], pot),
        (Chart::InfinityZero | Chart::InfinityPositive, 3) => Ok(0.0),
        _ => domain(format!("no radius for {chart:?} with {} components", x.len())),
    }
}

/// Cartesian state of a point of a finite-radius regularized chart.
pub fn chart_to_cartesian(chart: Chart, x: &[f64], pot: &ShapePotentials) -> Result<CartesianState> {
    match (chart, x.len()) {
        (Chart::ZeroEnergy, 4) => {
            zero_energy_to_cartesian(&ZeroEnergyState::from_array(&[x[0], x[1], x[2], x[3]]), pot)
        }
        (Chart::Reduced, 3) => zero_energy_to_cartesian(&lift_reduced(&[x[0], x[1], x[2]], pot)?, pot),
        (Chart::PositiveEnergy, 4) => {
            positive_to_cartesian(&PositiveEnergyState::from_array(&[x[0], x[1], x[2], x[3]]), pot)
        }
        (Chart::Cartesian, 6) => Ok(CartesianState::new([x[0], x[1], x[2]], [x[3], x[4], x[5]])),
        _ => domain(format!("no Cartesian lift for {chart:?} with {} components", x.len())),
    }
}

/// Binary-escape indicator of an adjacent pair: positive iff the pair is bound,
/// the third particle recedes from the pair's centre of mass with positive
/// relative energy, and it is farther than [`BINARY_SEPARATION_RATIO`] pair separations.
pub fn binary_indicator(c: &CartesianState, params: &SystemParams, pair: Pair) -> Result<f64> {
    let (i, j) = pair.indices();
    let k = match pair {
        Pair::P12 => 2,
        Pair::P23 => 0,
        Pair::P13 => return domain("only adjacent pairs form escaping binaries"),
    };
    let m = params.masses();
    let (a, b) = (params.exp_a(), params.exp_b());
    let w = |p: Pair, r: f64| crate::model::pair_potential(r, params.alpha(p), params.beta(p), a, b);
    let vel = |n: usize| c.p[n] / m[n];
    let mij = m[i] + m[j];
    let d = c.q[j] - c.q[i];
    let mu = m[i] * m[j] / mij;
    let e_bind = 0.5 * mu * (vel(j) - vel(i)).powi(2) + w(pair, d)?;
    let xc = (m[i] * c.q[i] + m[j] * c.q[j]) / mij;
    let vc = (c.p[i] + c.p[j]) / mij;
    let dist = (c.q[k] - xc).abs();
    let sgn = (c.q[k] - xc).signum();
    let ddot = sgn * (vel(k) - vc);
    let mu_out = m[k] * mij / (mij + m[k]);
    let (pik, pjk) = if k == 2 {
        (Pair::P13, Pair::P23)
    } else {
        (Pair::P12, Pair::P13)
    };
    let e_out = 0.5 * mu_out * ddot * ddot + w(pik, (c.q[k] - c.q[i]).abs())? + w(pjk, (c.q[k] - c.q[j]).abs())?;
    Ok((-e_bind).min(ddot).min(e_out).min(dist - BINARY_SEPARATION_RATIO * d))
}

/// The larger binary indicator of the two adjacent pairs, with its pair.
pub fn binary_escape(c: &CartesianState, params: &SystemParams) -> Result<(Pair, f64)> {
    let l = binary_indicator(c, params, Pair::P12)?;
    let r = binary_indicator(c, params, Pair::P23)?;
    Ok(if l >= r { (Pair::P12, l) } else { (Pair::P23, r) })
}

/// Terminal events that end an orbit once its escape class is settled.
///
/// Finite-radius charts stop at `R < R_esc` or at binary formation; infinity
/// charts stop at `|s| > 1 - s_margin`.
pub fn escape_events<'a, const N: usize>(
    chart: Chart,
    pot: &'a ShapePotentials,
    thr: &EscapeThresholds,
) -> Vec<EventSpec<'a, N>> {
    let thr = *thr;
    let mut out = Vec::new();
    match chart {
        Chart::ZeroEnergy | Chart::Reduced | Chart::PositiveEnergy => {
            out.push(EventSpec::new(
                EVENT_ESCAPE_RADIUS,
                Crossing::Falling,
                true,
                move |x: &[f64; N]| chart_radius(chart, x, pot).map_or(f64::NAN, |r| r - thr.r_esc),
            ));
            out.push(EventSpec::new(
                EVENT_BINARY,
                Crossing::Rising,
                true,
                move |x: &[f64; N]| {
                    chart_to_cartesian(chart, x, pot)
                        .and_then(|c| binary_escape(&c, &pot.params))
                        .map_or(f64::NAN, |(_, g)| g)
                },
            ));
        }
        Chart::InfinityZero | Chart::InfinityPositive => {
            out.push(EventSpec::new(
                EVENT_EDGE,
                Crossing::Rising,
                true,
                move |x: &[f64; N]| chart_shape(chart, x).map_or(f64::NAN, |(s, _, _)| s.abs() - (1.0 - thr.s_margin)),
            ));
        }
        _ => {}
    }
    out
}

/// Classify the terminal state of a trajectory.
pub fn classify_escape<const N: usize>(
    traj: &Trajectory<N>,
    pot: &ShapePotentials,
    thr: &EscapeThresholds,
) -> EscapeClass {
    let x = traj.last().state;
    let Ok((s, y, _)) = chart_shape(traj.chart, &x) else {
        return EscapeClass {
            kind: EscapeKind::Undetermined,
            asymptotic_s: f64::NAN,
            asymptotic_y: f64::NAN,
        };
    };
    let kind = classify_state(traj.chart, &x, pot, thr).unwrap_or(EscapeKind::Undetermined);
    EscapeClass {
        kind,
        asymptotic_s: s,
        asymptotic_y: y,
    }
}

/// Class of a single state in a regularized chart.
pub fn classify_state(chart: Chart, x: &[f64], pot: &ShapePotentials, thr: &EscapeThresholds) -> Result<EscapeKind> {
    let (s, y, w) = chart_shape(chart, x)?;
    let r = chart_radius(chart, x, pot)?;
    let edge = 1.0 - thr.s_margin;
    if r < thr.r_esc {
        if s.abs() >= edge && s * w > 0.0 {
            return Ok(if s < 0.0 {
                EscapeKind::TwoPlusOneLeft
            } else {
                EscapeKind::TwoPlusOneRight
            });
        }
        if s.abs() < edge && near_triple_escape(chart, s, y, w, pot, thr.delta)? {
            return Ok(EscapeKind::OneOneOne);
        }
        return Ok(EscapeKind::Undetermined);
    }
    let c = chart_to_cartesian(chart, x, pot)?;
    let (pair, g) = binary_escape(&c, &pot.params)?;
    if g > 0.0 {
        return Ok(if pair == Pair::P12 {
            EscapeKind::TwoPlusOneLeft
        } else {
            EscapeKind::TwoPlusOneRight
        });
    }
    Ok(EscapeKind::Undetermined)
}

fn near_triple_escape(chart: Chart, s: f64, y: f64, w: f64, pot: &ShapePotentials, delta: f64) -> Result<bool> {
    match chart {
        Chart::ZeroEnergy | Chart::Reduced | Chart::InfinityZero => {
            let (pm, pp) = equilibria_h0(pot)?;
            let d = |p: [f64; 3]| ((y - p[0]).powi(2) + (s - p[1]).powi(2) + (w - p[2]).powi(2)).sqrt();
            Ok(d(pm).min(d(pp)) < delta)
        }
        Chart::PositiveEnergy | Chart::InfinityPositive => {
            let v = (2.0 * pot.params.h()).sqrt();
            let d = ((y.abs() - v).powi(2) + w * w).sqrt();
            Ok(d < delta)
        }
        _ => Ok(false),
    }
}
