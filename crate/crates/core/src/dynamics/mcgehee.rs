//! McGehee coordinates `(r, v, s, u)` and their flow in the rescaled time `tau`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{Chart, Clock, VectorField};
use crate::model::{project_reduced, CartesianState};
use crate::shape::ShapePotentials;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McGeheeState {
    pub r: f64,
    pub v: f64,
    pub s: f64,
    pub u: f64,
}

impl McGeheeState {
    pub fn to_array(&self) -> [f64; 4] {
        [self.r, self.v, self.s, self.u]
    }

    pub fn from_array(x: &[f64; 4]) -> Self {
        McGeheeState {
            r: x[0],
            v: x[1],
            s: x[2],
            u: x[3],
        }
    }
}

fn check(st: &McGeheeState) -> Result<()> {
    if !(st.r > 0.0) || !(st.s > -1.0 && st.s < 1.0) || !st.v.is_finite() || !st.u.is_finite() {
        return domain(format!("McGehee state outside r > 0, |s| < 1: {st:?}"));
    }
    Ok(())
}

/// `r' = r v`, `v' = (b/2) v^2 + u^2 - a r^(b-a) U~ + b V~`, `s' = u / lambda`,
/// `u' = (b/2 - 1) u v + (r^(b-a) U~' - V~') / lambda`.
pub fn mcgehee_field(st: &McGeheeState, pot: &ShapePotentials) -> Result<McGeheeState> {
    check(st)?;
    let (a, b, lam) = (pot.exp_a(), pot.exp_b(), pot.lambda());
    let u_s = pot.shape_u(st.s)?;
    let v_s = pot.shape_v(st.s)?;
    let (u1, _) = pot.shape_u_derivs(st.s)?;
    let (v1, _) = pot.shape_v_derivs(st.s)?;
    let rba = st.r.powf(b - a);
    Ok(McGeheeState {
        r: st.r * st.v,
        v: 0.5 * b * st.v * st.v + st.u * st.u - a * rba * u_s + b * v_s,
        s: st.u / lam,
        u: (0.5 * b - 1.0) * st.u * st.v + (rba * u1 - v1) / lam,
    })
}

/// The physical Hamiltonian `r^-b (u^2/2 + v^2/2 + V~) - r^-a U~`, exactly conserved.
pub fn mcgehee_energy(st: &McGeheeState, pot: &ShapePotentials) -> Result<f64> {
    check(st)?;
    let (a, b) = (pot.exp_a(), pot.exp_b());
    let kin = 0.5 * (st.u * st.u + st.v * st.v);
    Ok(st.r.powf(-b) * (kin + pot.shape_v(st.s)?) - st.r.powf(-a) * pot.shape_u(st.s)?)
}

/// Gradient of [`mcgehee_energy`] in `(r, v, s, u)`.
pub fn mcgehee_energy_gradient(st: &McGeheeState, pot: &ShapePotentials) -> Result<[f64; 4]> {
    check(st)?;
    let (a, b) = (pot.exp_a(), pot.exp_b());
    let kin = 0.5 * (st.u * st.u + st.v * st.v);
    let (us, vs) = (pot.shape_u(st.s)?, pot.shape_v(st.s)?);
    let (u1, _) = pot.shape_u_derivs(st.s)?;
    let (v1, _) = pot.shape_v_derivs(st.s)?;
    let (rb, ra) = (st.r.powf(-b), st.r.powf(-a));
    Ok([
        -b * rb / st.r * (kin + vs) + a * ra / st.r * us,
        rb * st.v,
        rb * v1 - ra * u1,
        rb * st.u,
    ])
}

/// Residual of `u^2/2 + v^2/2 - r^(b-a) U~ + V~ = h r^b`.
pub fn mcgehee_energy_relation(st: &McGeheeState, pot: &ShapePotentials, h: f64) -> Result<f64> {
    check(st)?;
    let (a, b) = (pot.exp_a(), pot.exp_b());
    Ok(
        0.5 * (st.u * st.u + st.v * st.v) - st.r.powf(b - a) * pot.shape_u(st.s)? + pot.shape_v(st.s)?
            - h * st.r.powf(b),
    )
}

/// Cartesian to McGehee; the state is first moved to the centre-of-mass frame.
pub fn to_mcgehee(state: &CartesianState, pot: &ShapePotentials) -> Result<McGeheeState> {
    let g = &pot.geometry;
    let red = project_reduced(state, &pot.params);
    let r = g.m_dot(&red.q, &red.q).sqrt();
    if !(r > 0.0) || red.q[1] <= red.q[0] || red.q[2] <= red.q[1] {
        return domain(format!("degenerate or unordered configuration {:?}", state.q));
    }
    let unit = red.q.map(|x| x / r);
    let s = g.shape_inverse(&unit)?;
    if !(s > -1.0 && s < 1.0) {
        return domain("configuration is a collision");
    }
    let t = g.apply_atilde(&unit);
    let dot = |x: &[f64; 3]| x[0] * red.p[0] + x[1] * red.p[1] + x[2] * red.p[2];
    let rb = r.powf(0.5 * pot.exp_b());
    Ok(McGeheeState {
        r,
        v: rb * dot(&unit),
        s,
        u: rb * dot(&t),
    })
}

/// McGehee to Cartesian: `q = r S(s)`, `p = r^(-b/2) (u M Atilde S + v M S)`.
pub fn from_mcgehee(st: &McGeheeState, pot: &ShapePotentials) -> Result<CartesianState> {
    check(st)?;
    let g = &pot.geometry;
    let unit = g.shape_map(st.s)?;
    let ms = g.m_vec(&unit);
    let mts = g.m_vec(&g.apply_atilde(&unit));
    let scale = st.r.powf(-0.5 * pot.exp_b());
    Ok(CartesianState {
        q: unit.map(|x| st.r * x),
        p: [0, 1, 2].map(|i| scale * (st.u * mts[i] + st.v * ms[i])),
    })
}

/// Rest points of the McGehee flow: `v = u = 0`, `b V~ U~' = a U~ V~'` and
/// `a r^(b-a) U~ = b V~`. Returns each state with the (negative) energy it lies on.
pub fn mcgehee_equilibria(pot: &ShapePotentials) -> Result<Vec<(McGeheeState, f64)>> {
    let (a, b) = (pot.exp_a(), pot.exp_b());
    let g = |s: f64| -> Result<f64> {
        let (u1, _) = pot.shape_u_derivs(s)?;
        let (v1, _) = pot.shape_v_derivs(s)?;
        Ok(b * pot.shape_v(s)? * u1 - a * pot.shape_u(s)? * v1)
    };
    let n = 4000;
    let grid: Vec<f64> = (0..=n).map(|k| -0.999 + 1.998 * k as f64 / n as f64).collect();
    let mut roots = Vec::new();
    let mut prev = (grid[0], g(grid[0])?);
    for &s in &grid[1..] {
        let cur = (s, g(s)?);
        if prev.1 == 0.0 {
            roots.push(prev.0);
        } else if prev.1 * cur.1 < 0.0 {
            let (mut lo, mut hi, glo) = (prev.0, cur.0, prev.1);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid)?;
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (gm < 0.0) == (glo < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    if roots.is_empty() {
        return Err(Error::Analysis("no McGehee rest point found".into()));
    }
    roots
        .into_iter()
        .map(|s| {
            let us = pot.shape_u(s)?;
            let r = (b * pot.shape_v(s)? / (a * us)).powf(1.0 / (b - a));
            let h = -(b - a) * us / (b * r.powf(a));
            Ok((McGeheeState { r, v: 0.0, s, u: 0.0 }, h))
        })
        .collect()
}

/// The McGehee flow as a [`VectorField`]; the energy residual is `|H - h|`.
pub struct McGeheeFlow<'a> {
    pub pot: &'a ShapePotentials,
}

impl VectorField<4> for McGeheeFlow<'_> {
    fn eval(&self, x: &[f64; 4]) -> Result<[f64; 4]> {
        Ok(mcgehee_field(&McGeheeState::from_array(x), self.pot)?.to_array())
    }

    fn chart(&self) -> Chart {
        Chart::McGehee
    }

    fn clock(&self) -> Clock {
        Clock::Tau
    }

    fn energy_residual(&self, x: &[f64; 4]) -> f64 {
        mcgehee_energy(&McGeheeState::from_array(x), self.pot)
            .map_or(f64::INFINITY, |e| (e - self.pot.params.h()).abs())
    }
}
