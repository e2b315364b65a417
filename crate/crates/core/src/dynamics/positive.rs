//! The positive-energy chart `(Rt, vt, st, ut)`.
//!
//! With `Theta = 1 - st^2` the size is `r = 1 / (Theta Rt)`, momenta are
//! `p = ut M Atilde S + vt M S` and `dt/dsigma = 1 / Rt`.

use serde::{Deserialize, Serialize};

use super::{RegTerms, ON_MANIFOLD_TOL};
use crate::error::{domain, Result};
use crate::field::{Chart, Clock, VectorField};
use crate::model::{project_reduced, CartesianState};
use crate::shape::ShapePotentials;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveEnergyState {
    pub rt: f64,
    pub vt: f64,
    pub st: f64,
    pub ut: f64,
}

impl PositiveEnergyState {
    pub fn to_array(&self) -> [f64; 4] {
        [self.rt, self.vt, self.st, self.ut]
    }

    pub fn from_array(x: &[f64; 4]) -> Self {
        PositiveEnergyState {
            rt: x[0],
            vt: x[1],
            st: x[2],
            ut: x[3],
        }
    }
}

fn check(st: &PositiveEnergyState) -> Result<()> {
    if !(st.rt >= 0.0 && st.rt.is_finite())
        || !(-1.0..=1.0).contains(&st.st)
        || !st.vt.is_finite()
        || !st.ut.is_finite()
    {
        return domain(format!("positive-energy state outside its domain: {st:?}"));
    }
    Ok(())
}

/// `F = (ut^2 + vt^2)/2 - Rt^a Theta^a U~ + Rt^b Theta^b V~`; equals `h` on the level set.
pub fn positive_energy(st: &PositiveEnergyState, pot: &ShapePotentials) -> Result<f64> {
    check(st)?;
    let t = RegTerms::at(pot, st.st)?;
    let (a, b) = (pot.exp_a(), pot.exp_b());
    Ok(0.5 * (st.ut * st.ut + st.vt * st.vt) - st.rt.powf(a) * t.ureg + st.rt.powf(b) * t.vreg)
}

/// Gradient of [`positive_energy`] in `(Rt, vt, st, ut)`.
pub fn positive_energy_gradient(st: &PositiveEnergyState, pot: &ShapePotentials) -> Result<[f64; 4]> {
    check(st)?;
    let t = RegTerms::at(pot, st.st)?;
    let (a, b) = (pot.exp_a(), pot.exp_b());
    let (ra, rb) = (st.rt.powf(a), st.rt.powf(b));
    Ok([
        -a * st.rt.powf(a - 1.0) * t.ureg + b * st.rt.powf(b - 1.0) * t.vreg,
        st.vt,
        -ra * t.ureg_d + rb * t.vreg_d,
        st.ut,
    ])
}

/// `Rt' = -Rt (Theta vt - 2 st ut / lambda)`,
/// `vt' = Theta (ut^2 - a Rt^a Theta^a U~ + b Rt^b Theta^b V~)`,
/// `st' = Theta ut / lambda`,
/// `ut' = -Theta ut vt + (Rt^a Theta^(a+1) U~' - Rt^b Theta^(b+1) V~') / lambda`.
pub fn positive_energy_field(st: &PositiveEnergyState, pot: &ShapePotentials) -> Result<PositiveEnergyState> {
    check(st)?;
    let t = RegTerms::at(pot, st.st)?;
    let (a, b, lam) = (pot.exp_a(), pot.exp_b(), pot.lambda());
    let th = t.phi.max(0.0);
    let (ra, rb) = (st.rt.powf(a), st.rt.powf(b));
    Ok(PositiveEnergyState {
        rt: -st.rt * (th * st.vt - 2.0 * st.st * st.ut / lam),
        vt: th * (st.ut * st.ut - a * ra * t.ureg + b * rb * t.vreg),
        st: th * st.ut / lam,
        ut: -th * st.ut * st.vt + (ra * t.upr - rb * t.vpr) / lam,
    })
}

/// Flow on `N_h = {Rt = 0}`: `vt' = Theta ut^2`, `st' = Theta ut / lambda`, `ut' = -Theta ut vt`.
pub fn infinity_field_hpos(x: &[f64; 3], h: f64, pot: &ShapePotentials) -> Result<[f64; 3]> {
    let res = x[0] * x[0] + x[2] * x[2] - 2.0 * h;
    if res.abs() > ON_MANIFOLD_TOL * (1.0 + 2.0 * h) {
        return domain(format!(
            "state {x:?} is off the cylinder ut^2 + vt^2 = 2h (residual {res})"
        ));
    }
    infinity_hpos_unchecked(x, pot.lambda())
}

fn infinity_hpos_unchecked(x: &[f64; 3], lambda: f64) -> Result<[f64; 3]> {
    let [vt, st, ut] = *x;
    if !(-1.0..=1.0).contains(&st) {
        return domain(format!("shape coordinate must lie in [-1, 1], got {st}"));
    }
    let th = 1.0 - st * st;
    Ok([th * ut * ut, th * ut / lambda, -th * ut * vt])
}

/// `chi = atan2(vt, ut)`, which advances linearly in `st` along `N_h` orbits.
pub fn chi(vt: f64, ut: f64) -> f64 {
    vt.atan2(ut)
}

/// Positive-energy chart from a Cartesian state (moved to the centre-of-mass frame).
pub fn positive_from_cartesian(c: &CartesianState, pot: &ShapePotentials) -> Result<PositiveEnergyState> {
    let g = &pot.geometry;
    let red = project_reduced(c, &pot.params);
    let r = g.m_dot(&red.q, &red.q).sqrt();
    if !(r > 0.0) || red.q[1] <= red.q[0] || red.q[2] <= red.q[1] {
        return domain(format!("degenerate or unordered configuration {:?}", c.q));
    }
    let unit = red.q.map(|x| x / r);
    let s = g.shape_inverse(&unit)?;
    let th = 1.0 - s * s;
    if !(th > 0.0) {
        return domain("configuration is a collision");
    }
    let dot = |x: &[f64; 3]| x[0] * red.p[0] + x[1] * red.p[1] + x[2] * red.p[2];
    Ok(PositiveEnergyState {
        rt: 1.0 / (th * r),
        vt: dot(&unit),
        st: s,
        ut: dot(&g.apply_atilde(&unit)),
    })
}

/// Cartesian state of a positive-energy chart point with `Rt > 0` and `|st| < 1`.
pub fn positive_to_cartesian(st: &PositiveEnergyState, pot: &ShapePotentials) -> Result<CartesianState> {
    check(st)?;
    let th = 1.0 - st.st * st.st;
    if !(st.rt > 0.0 && th > 0.0) {
        return domain("boundary states (Rt = 0 or st = +-1) have no Cartesian image");
    }
    let g = &pot.geometry;
    let r = 1.0 / (th * st.rt);
    let unit = g.shape_map(st.st)?;
    let ms = g.m_vec(&unit);
    let mts = g.m_vec(&g.apply_atilde(&unit));
    Ok(CartesianState {
        q: unit.map(|v| r * v),
        p: [0, 1, 2].map(|i| st.ut * mts[i] + st.vt * ms[i]),
    })
}

/// `dt/dsigma = 1 / Rt`.
pub fn physical_rate_hpos(st: &PositiveEnergyState) -> f64 {
    1.0 / st.rt
}

/// Largest `Rt` at shape `st` for which the level `h` leaves nonnegative kinetic energy.
pub fn max_rt(h: f64, st: f64, pot: &ShapePotentials) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("energy level must be positive, got {h}"));
    }
    let t = RegTerms::at(pot, st)?;
    let (a, b) = (pot.exp_a(), pot.exp_b());
    let avail = |r: f64| h + r.powf(a) * t.ureg - r.powf(b) * t.vreg;
    let mut hi = 1.0;
    while avail(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return domain("no turning point in Rt");
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if avail(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The positive-energy flow; the energy residual is `|F - h|`.
pub struct PositiveEnergyFlow<'a> {
    pub pot: &'a ShapePotentials,
    pub h: f64,
}

impl VectorField<4> for PositiveEnergyFlow<'_> {
    fn eval(&self, x: &[f64; 4]) -> Result<[f64; 4]> {
        Ok(positive_energy_field(&PositiveEnergyState::from_array(x), self.pot)?.to_array())
    }

    fn chart(&self) -> Chart {
        Chart::PositiveEnergy
    }

    fn clock(&self) -> Clock {
        Clock::Sigma
    }

    fn energy_residual(&self, x: &[f64; 4]) -> f64 {
        positive_energy(&PositiveEnergyState::from_array(x), self.pot).map_or(f64::INFINITY, |e| (e - self.h).abs())
    }
}

/// The flow on `N_h`; the residual is `|ut^2 + vt^2 - 2h|`.
pub struct InfinityPositiveFlow {
    pub lambda: f64,
    pub h: f64,
}

impl VectorField<3> for InfinityPositiveFlow {
    fn eval(&self, x: &[f64; 3]) -> Result<[f64; 3]> {
        infinity_hpos_unchecked(x, self.lambda)
    }

    fn chart(&self) -> Chart {
        Chart::InfinityPositive
    }

    fn clock(&self) -> Clock {
        Clock::Sigma
    }

    fn energy_residual(&self, x: &[f64; 3]) -> f64 {
        (x[0] * x[0] + x[2] * x[2] - 2.0 * self.h).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{cartesian_field, hamiltonian_energy, SystemParams};

    fn pot() -> ShapePotentials {
        ShapePotentials::new(
            &SystemParams::new([1.0, 1.7, 0.8], [1.0, 0.9, 1.4], [0.6, 0.5, 1.1], 6.0, 12.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn state() -> CartesianState {
        CartesianState::new([-1.3, 0.1, 1.4], [0.4, -0.9, 0.7])
    }

    #[test]
    fn chart_round_trip_preserves_energy() {
        let pot = pot();
        let c = project_reduced(&state(), &pot.params);
        let h = hamiltonian_energy(&c, &pot.params).unwrap();
        let z = positive_from_cartesian(&c, &pot).unwrap();
        assert!((positive_energy(&z, &pot).unwrap() - h).abs() < 1e-12);
        let back = positive_to_cartesian(&z, &pot).unwrap();
        for i in 0..3 {
            assert!((back.q[i] - c.q[i]).abs() < 1e-12);
            assert!((back.p[i] - c.p[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn field_matches_cartesian_flow() {
        let pot = pot();
        let c = project_reduced(&state(), &pot.params);
        let z = positive_from_cartesian(&c, &pot).unwrap();
        let f = positive_energy_field(&z, &pot).unwrap().to_array();
        let dc = cartesian_field(&c, &pot.params).unwrap();
        let dt = 1e-6;
        let step = |sgn: f64| {
            let st = CartesianState::new(
                [0, 1, 2].map(|i| c.q[i] + sgn * dt * dc.q[i]),
                [0, 1, 2].map(|i| c.p[i] + sgn * dt * dc.p[i]),
            );
            positive_from_cartesian(&st, &pot).unwrap().to_array()
        };
        let (fw, bw) = (step(1.0), step(-1.0));
        let rate = physical_rate_hpos(&z);
        for i in 0..4 {
            let fd = (fw[i] - bw[i]) / (2.0 * dt) * rate;
            assert!((fd - f[i]).abs() < 1e-6 * f[i].abs().max(1.0), "{i}: {fd} vs {}", f[i]);
        }
    }

    #[test]
    fn boundary_sets_are_invariant() {
        let pot = pot();
        let st = PositiveEnergyState {
            rt: 0.0,
            vt: 0.3,
            st: 0.2,
            ut: 1.0,
        };
        let f = positive_energy_field(&st, &pot).unwrap();
        assert_eq!(f.rt, 0.0);
        let inf = infinity_hpos_unchecked(&[0.3, 0.2, 1.0], pot.lambda()).unwrap();
        assert_eq!([f.vt, f.st, f.ut], inf);
        for s in [-1.0, 1.0] {
            let st = PositiveEnergyState {
                rt: 0.2,
                vt: 0.3,
                st: s,
                ut: 1.0,
            };
            assert_eq!(positive_energy_field(&st, &pot).unwrap().st, 0.0);
        }
    }

    #[test]
    fn infinity_flow_rest_points_and_conservation() {
        let pot = pot();
        let h = 1.0f64;
        let v = (2.0 * h).sqrt();
        for s in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for sign in [1.0, -1.0] {
                let f = infinity_field_hpos(&[sign * v, s, 0.0], h, &pot).unwrap();
                assert_eq!(f, [0.0; 3]);
            }
        }
        for vt in [-1.0, 0.0, 0.7] {
            let ut = (2.0 * h - vt * vt).sqrt();
            for s in [-1.0, 1.0] {
                assert!(infinity_field_hpos(&[vt, s, ut], h, &pot)
                    .unwrap()
                    .iter()
                    .all(|x| *x == 0.0));
            }
        }
        let x = [0.3, 0.1, (2.0 * h - 0.09f64).sqrt()];
        let f = infinity_field_hpos(&x, h, &pot).unwrap();
        assert!((x[0] * f[0] + x[2] * f[2]).abs() < 1e-15);
        assert!(f[0] >= 0.0);
        assert!(infinity_field_hpos(&[0.3, 0.1, 0.3], h, &pot).is_err());
    }

    #[test]
    fn max_rt_is_a_turning_point() {
        let pot = pot();
        let r = max_rt(1.0, 0.2, &pot).unwrap();
        let t = RegTerms::at(&pot, 0.2).unwrap();
        let avail = 1.0 + r.powi(6) * t.ureg - r.powi(12) * t.vreg;
        assert!(avail.abs() < 1e-10);
        assert!(max_rt(0.0, 0.2, &pot).is_err());
    }
}
