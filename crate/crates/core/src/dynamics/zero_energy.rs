//! The zero-energy regularized chart `(R, y, s, w)` and its reductions.
//!
//! With `phi = 1 - s^2` the size is `r = 1 / (phi R)`, momenta are
//! `p = r^(-a/2) (x M Atilde S + y M S)` with `w = phi^(a/2) x`, and the clock
//! satisfies `dt/dsigma = phi^(a/2-1) R^(-a/2-1)`. All terms stay finite at the
//! binary collisions `s = +-1` and at infinity `R = 0`.

use serde::{Deserialize, Serialize};

use super::{phi_pow, RegTerms, ON_MANIFOLD_TOL};
use crate::error::{domain, Result};
use crate::field::{Chart, Clock, VectorField};
use crate::model::{project_reduced, CartesianState};
use crate::shape::ShapePotentials;

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEnergyState {
    pub R: f64,
    pub y: f64,
    pub s: f64,
    pub w: f64,
}

impl ZeroEnergyState {
    pub fn to_array(&self) -> [f64; 4] {
        [self.R, self.y, self.s, self.w]
    }

    pub fn from_array(x: &[f64; 4]) -> Self {
        ZeroEnergyState {
            R: x[0],
            y: x[1],
            s: x[2],
            w: x[3],
        }
    }

    pub fn reduced(&self) -> [f64; 3] {
        [self.y, self.s, self.w]
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&s) {
        return domain(format!("shape coordinate must lie in [-1, 1], got {s}"));
    }
    Ok(())
}

fn check_full(st: &ZeroEnergyState) -> Result<()> {
    check_s(st.s)?;
    if !(st.R >= 0.0 && st.R.is_finite() && st.y.is_finite() && st.w.is_finite()) {
        return domain(format!("zero-energy state outside R >= 0: {st:?}"));
    }
    Ok(())
}

/// `G = (1 - s^2)^a (U~ - y^2/2) - w^2/2`, which equals `R^(b-a) (1 - s^2)^b V~` at zero energy.
pub fn admissibility(x: &[f64; 3], pot: &ShapePotentials) -> Result<f64> {
    check_s(x[1])?;
    let t = RegTerms::at(pot, x[1])?;
    Ok(g_of(x, &t, pot.exp_a()))
}

fn g_of(x: &[f64; 3], t: &RegTerms, a: f64) -> f64 {
    t.ureg - 0.5 * phi_pow(t.phi, a) * x[0] * x[0] - 0.5 * x[2] * x[2]
}

/// Gradient of [`admissibility`] in `(y, s, w)`.
pub fn admissibility_gradient(x: &[f64; 3], pot: &ShapePotentials) -> Result<[f64; 3]> {
    check_s(x[1])?;
    let t = RegTerms::at(pot, x[1])?;
    let a = pot.exp_a();
    let [y, s, w] = *x;
    Ok([
        -phi_pow(t.phi, a) * y,
        t.ureg_d + a * s * phi_pow(t.phi, a - 1.0) * y * y,
        -w,
    ])
}

fn admissibility_tol(t: &RegTerms) -> f64 {
    ON_MANIFOLD_TOL * (1.0 + t.ureg)
}

/// The energy integral `F = w^2/2 + phi^a (y^2/2 - U~) + R^(b-a) phi^b V~`; zero on the level set.
pub fn zero_energy_energy(st: &ZeroEnergyState, pot: &ShapePotentials) -> Result<f64> {
    check_full(st)?;
    let t = RegTerms::at(pot, st.s)?;
    let (a, b) = (pot.exp_a(), pot.exp_b());
    Ok(0.5 * st.w * st.w + 0.5 * phi_pow(t.phi, a) * st.y * st.y - t.ureg + st.R.powf(b - a) * t.vreg)
}

/// Gradient of [`zero_energy_energy`] in `(R, y, s, w)`.
pub fn zero_energy_energy_gradient(st: &ZeroEnergyState, pot: &ShapePotentials) -> Result<[f64; 4]> {
    check_full(st)?;
    let t = RegTerms::at(pot, st.s)?;
    let (a, b) = (pot.exp_a(), pot.exp_b());
    let rba = st.R.powf(b - a);
    Ok([
        (b - a) * st.R.powf(b - a - 1.0) * t.vreg,
        phi_pow(t.phi, a) * st.y,
        -a * st.s * phi_pow(t.phi, a - 1.0) * st.y * st.y - t.ureg_d + rba * t.vreg_d,
        st.w,
    ])
}

/// The regularized zero-energy field on `[0, inf) x R x [-1, 1] x R`.
pub fn zero_energy_field(st: &ZeroEnergyState, pot: &ShapePotentials) -> Result<ZeroEnergyState> {
    check_full(st)?;
    let t = RegTerms::at(pot, st.s)?;
    let (a, b, lam) = (pot.exp_a(), pot.exp_b(), pot.lambda());
    let rba = st.R.powf(b - a);
    if rba * t.vreg > t.ureg - 0.5 * phi_pow(t.phi, a) * st.y * st.y + admissibility_tol(&t) {
        return domain(format!("zero-energy state outside the Hill region: {st:?}"));
    }
    Ok(zero_energy_field_terms(st, &t, a, b, lam))
}

fn zero_energy_field_terms(st: &ZeroEnergyState, t: &RegTerms, a: f64, b: f64, lam: f64) -> ZeroEnergyState {
    let pa = phi_pow(t.phi, a);
    let ph = phi_pow(t.phi, 0.5 * a);
    let pm = phi_pow(t.phi, 0.5 * a - 1.0);
    let rba = st.R.powf(b - a);
    let (y, s, w) = (st.y, st.s, st.w);
    ZeroEnergyState {
        R: -st.R * (pa * y - 2.0 * s / lam * pm * w),
        y: 0.5 * a * (pa * y * y - 2.0 * t.ureg) + w * w + b * rba * t.vreg,
        s: ph * w / lam,
        w: (0.5 * a - 1.0) * pa * y * w - a / lam * s * pm * w * w + pm * t.upr / lam - rba * pm * t.vpr / lam,
    }
}

/// The `R` determined by the energy relation; zero exactly on the infinity manifold.
#[allow(non_snake_case)]
pub fn slave_R(x: &[f64; 3], pot: &ShapePotentials) -> Result<f64> {
    check_s(x[1])?;
    let t = RegTerms::at(pot, x[1])?;
    let g = g_of(x, &t, pot.exp_a());
    if g < -admissibility_tol(&t) {
        return domain(format!("state {x:?} violates the energy relation (G = {g})"));
    }
    Ok((g.max(0.0) / t.vreg).powf(1.0 / (pot.exp_b() - pot.exp_a())))
}

/// Full state from `(y, s, w)` with `R` slaved.
pub fn lift_reduced(x: &[f64; 3], pot: &ShapePotentials) -> Result<ZeroEnergyState> {
    Ok(ZeroEnergyState {
        R: slave_R(x, pot)?,
        y: x[0],
        s: x[1],
        w: x[2],
    })
}

/// The reduced field on `(y, s, w)` obtained by eliminating `R^(b-a) phi^b V~ = G`.
pub fn reduced_zero_energy_field(x: &[f64; 3], pot: &ShapePotentials) -> Result<[f64; 3]> {
    check_s(x[1])?;
    let t = RegTerms::at(pot, x[1])?;
    if g_of(x, &t, pot.exp_a()) < -admissibility_tol(&t) {
        return domain(format!("state {x:?} is not admissible"));
    }
    Ok(reduced_terms(x, &t, pot.exp_a(), pot.exp_b(), pot.lambda()))
}

fn reduced_terms(x: &[f64; 3], t: &RegTerms, a: f64, b: f64, lam: f64) -> [f64; 3] {
    let [y, s, w] = *x;
    let pa = phi_pow(t.phi, a);
    let pm = phi_pow(t.phi, 0.5 * a - 1.0);
    let (l, _) = t.log_v();
    let core = t.ureg - 0.5 * pa * y * y;
    [
        (b - a) * core - (0.5 * b - 1.0) * w * w,
        phi_pow(t.phi, 0.5 * a) * w / lam,
        (0.5 * a - 1.0) * pa * y * w + pm / (2.0 * lam) * (l - 2.0 * a * s) * w * w + pm / lam * (t.upr - l * core),
    ]
}

/// Analytic Jacobian of [`reduced_zero_energy_field`], rows `(y', s', w')`.
pub fn reduced_jacobian(x: &[f64; 3], pot: &ShapePotentials) -> Result<[[f64; 3]; 3]> {
    check_s(x[1])?;
    let t = RegTerms::at(pot, x[1])?;
    let (a, b, lam) = (pot.exp_a(), pot.exp_b(), pot.lambda());
    let [y, s, w] = *x;
    let phi = t.phi;
    let pa = phi_pow(phi, a);
    let pa1 = phi_pow(phi, a - 1.0);
    let ph = phi_pow(phi, 0.5 * a);
    let pm = phi_pow(phi, 0.5 * a - 1.0);
    let pm_d = -2.0 * s * (0.5 * a - 1.0) * phi_pow(phi, 0.5 * a - 2.0);
    let (l, l_d) = t.log_v();
    let core = t.ureg - 0.5 * pa * y * y;
    let core_s = t.ureg_d + a * s * pa1 * y * y;
    let bterm = t.upr - l * core;
    let bterm_s = t.upr_d - l_d * core - l * core_s;

    let fy = [-(b - a) * pa * y, (b - a) * core_s, -(b - 2.0) * w];
    let fs = [0.0, -a * s * pm * w / lam, ph / lam];
    let fw = [
        (0.5 * a - 1.0) * pa * w + pm / lam * l * pa * y,
        (0.5 * a - 1.0) * (-2.0 * a * s * pa1) * y * w
            + (pm_d * (l - 2.0 * a * s) + pm * (l_d - 2.0 * a)) * w * w / (2.0 * lam)
            + (pm_d * bterm + pm * bterm_s) / lam,
        (0.5 * a - 1.0) * pa * y + pm / lam * (l - 2.0 * a * s) * w,
    ];
    Ok([fy, fs, fw])
}

/// Exact identity of the reduced field: `dG/dsigma - c G`, with
/// `c = (b - a) R'/R + (V'/V) s'`. Vanishes identically for the correct field.
pub fn reduced_consistency_residual(x: &[f64; 3], pot: &ShapePotentials) -> Result<f64> {
    let f = reduced_zero_energy_field(x, pot)?;
    let grad = admissibility_gradient(x, pot)?;
    let t = RegTerms::at(pot, x[1])?;
    let (a, b, lam) = (pot.exp_a(), pot.exp_b(), pot.lambda());
    let [y, s, w] = *x;
    let r_log = -(phi_pow(t.phi, a) * y - 2.0 * s / lam * phi_pow(t.phi, 0.5 * a - 1.0) * w);
    let c = (b - a) * r_log + t.vreg_d / t.vreg * f[1];
    let g = g_of(x, &t, a);
    Ok(crate::field::directional_derivative(&grad, &f) - c * g)
}

/// The flow on the infinity manifold `M = {G = 0}`:
/// `y' = -(a/2 - 1) w^2`, `s' = phi^(a/2) w / lambda`,
/// `w' = (a/2 - 1) phi^a y w + phi^(a/2-1) (phi^(a+1) U~' - a s w^2) / lambda`.
pub fn infinity_field_h0(x: &[f64; 3], pot: &ShapePotentials) -> Result<[f64; 3]> {
    let g = admissibility(x, pot)?;
    if g.abs() > ON_MANIFOLD_TOL {
        return domain(format!("state {x:?} is off the infinity manifold (G = {g})"));
    }
    infinity_field_h0_unchecked(x, pot)
}

fn infinity_field_h0_unchecked(x: &[f64; 3], pot: &ShapePotentials) -> Result<[f64; 3]> {
    check_s(x[1])?;
    let t = RegTerms::at(pot, x[1])?;
    let (a, lam) = (pot.exp_a(), pot.lambda());
    let [y, s, w] = *x;
    let pm = phi_pow(t.phi, 0.5 * a - 1.0);
    Ok([
        -(0.5 * a - 1.0) * w * w,
        phi_pow(t.phi, 0.5 * a) * w / lam,
        (0.5 * a - 1.0) * phi_pow(t.phi, a) * y * w + pm * (t.upr - a * s * w * w) / lam,
    ])
}

/// Zero-energy chart from a Cartesian state (moved to the centre-of-mass frame).
pub fn zero_energy_from_cartesian(c: &CartesianState, pot: &ShapePotentials) -> Result<ZeroEnergyState> {
    let g = &pot.geometry;
    let red = project_reduced(c, &pot.params);
    let r = g.m_dot(&red.q, &red.q).sqrt();
    if !(r > 0.0) || red.q[1] <= red.q[0] || red.q[2] <= red.q[1] {
        return domain(format!("degenerate or unordered configuration {:?}", c.q));
    }
    let unit = red.q.map(|x| x / r);
    let s = g.shape_inverse(&unit)?;
    let phi = 1.0 - s * s;
    if !(phi > 0.0) {
        return domain("configuration is a collision");
    }
    let dot = |x: &[f64; 3]| x[0] * red.p[0] + x[1] * red.p[1] + x[2] * red.p[2];
    let ra = r.powf(0.5 * pot.exp_a());
    Ok(ZeroEnergyState {
        R: 1.0 / (phi * r),
        y: ra * dot(&unit),
        s,
        w: phi.powf(0.5 * pot.exp_a()) * ra * dot(&g.apply_atilde(&unit)),
    })
}

/// Cartesian state of a zero-energy chart point with `R > 0` and `|s| < 1`.
pub fn zero_energy_to_cartesian(st: &ZeroEnergyState, pot: &ShapePotentials) -> Result<CartesianState> {
    check_full(st)?;
    let phi = 1.0 - st.s * st.s;
    if !(st.R > 0.0 && phi > 0.0) {
        return domain("boundary states (R = 0 or s = +-1) have no Cartesian image");
    }
    let g = &pot.geometry;
    let a = pot.exp_a();
    let r = 1.0 / (phi * st.R);
    let unit = g.shape_map(st.s)?;
    let ms = g.m_vec(&unit);
    let mts = g.m_vec(&g.apply_atilde(&unit));
    let x = st.w / phi.powf(0.5 * a);
    let scale = r.powf(-0.5 * a);
    Ok(CartesianState {
        q: unit.map(|v| r * v),
        p: [0, 1, 2].map(|i| scale * (x * mts[i] + st.y * ms[i])),
    })
}

/// `dt/dsigma = phi^(a/2-1) R^(-a/2-1)`.
pub fn physical_rate_h0(st: &ZeroEnergyState, pot: &ShapePotentials) -> f64 {
    let a = pot.exp_a();
    phi_pow(1.0 - st.s * st.s, 0.5 * a - 1.0) * st.R.powf(-0.5 * a - 1.0)
}

/// `(ln R)' = -(phi^a y - 2 s phi^(a/2-1) w / lambda)`. Integrating it recovers `R`
/// near `M`, where the slaved value is lost to cancellation in `G`.
pub fn log_radius_rate(x: &[f64; 3], pot: &ShapePotentials) -> Result<f64> {
    check_s(x[1])?;
    let (a, lam) = (pot.exp_a(), pot.lambda());
    let phi = 1.0 - x[1] * x[1];
    Ok(-(phi_pow(phi, a) * x[0] - 2.0 * x[1] / lam * phi_pow(phi, 0.5 * a - 1.0) * x[2]))
}

/// The full zero-energy flow; the energy residual is `|F|`.
pub struct ZeroEnergyFlow<'a> {
    pub pot: &'a ShapePotentials,
}

impl VectorField<4> for ZeroEnergyFlow<'_> {
    fn eval(&self, x: &[f64; 4]) -> Result<[f64; 4]> {
        Ok(zero_energy_field(&ZeroEnergyState::from_array(x), self.pot)?.to_array())
    }

    fn chart(&self) -> Chart {
        Chart::ZeroEnergy
    }

    fn clock(&self) -> Clock {
        Clock::Sigma
    }

    fn energy_residual(&self, x: &[f64; 4]) -> f64 {
        zero_energy_energy(&ZeroEnergyState::from_array(x), self.pot).map_or(f64::INFINITY, f64::abs)
    }
}

/// The reduced flow on `(y, s, w)`; the residual is the amount by which the
/// state leaves the admissible region `G >= 0`.
pub struct ReducedFlow<'a> {
    pub pot: &'a ShapePotentials,
}

impl VectorField<3> for ReducedFlow<'_> {
    fn eval(&self, x: &[f64; 3]) -> Result<[f64; 3]> {
        reduced_zero_energy_field(x, self.pot)
    }

    fn chart(&self) -> Chart {
        Chart::Reduced
    }

    fn clock(&self) -> Clock {
        Clock::Sigma
    }

    fn energy_residual(&self, x: &[f64; 3]) -> f64 {
        admissibility(x, self.pot).map_or(f64::INFINITY, |g| (-g).max(0.0))
    }
}

/// The flow on the infinity manifold; the residual is `|G|`.
pub struct InfinityZeroFlow<'a> {
    pub pot: &'a ShapePotentials,
}

impl VectorField<3> for InfinityZeroFlow<'_> {
    fn eval(&self, x: &[f64; 3]) -> Result<[f64; 3]> {
        infinity_field_h0_unchecked(x, self.pot)
    }

    fn chart(&self) -> Chart {
        Chart::InfinityZero
    }

    fn clock(&self) -> Clock {
        Clock::Sigma
    }

    fn energy_residual(&self, x: &[f64; 3]) -> f64 {
        admissibility(x, self.pot).map_or(f64::INFINITY, f64::abs)
    }
}
