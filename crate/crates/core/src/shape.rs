//! Mass geometry of the collinear shape interval and the one-variable potentials.
//!
//! Unit configurations (`q^T M q = 1`, centre of mass at the origin) are
//! parameterized by `s in [-1, 1]`; `s = -1` is the 1-2 collision and `s = 1`
//! the 2-3 collision. Quantities prefixed `reg` are multiplied by powers of
//! `phi(s) = 1 - s^2` so that they stay finite on the closed interval.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{Pair, SystemParams};

pub type Mat3 = [[f64; 3]; 3];

/// Mass matrix, collision endpoints, the quarter-turn `Atilde` and the mass angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassGeometry {
    pub masses: [f64; 3],
    pub a_end: [f64; 3],
    pub b_end: [f64; 3],
    pub atilde: Mat3,
    pub lambda: f64,
}

pub fn mat_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

impl MassGeometry {
    pub fn new(masses: [f64; 3]) -> Result<Self> {
        if !masses.iter().all(|m| m.is_finite() && *m > 0.0) {
            return Err(Error::InvalidParams("masses must be positive and finite".into()));
        }
        let [m1, m2, m3] = masses;
        let mt = m1 + m2 + m3;
        let a1 = -(m3 / ((m1 + m2) * mt)).sqrt();
        let a3 = ((m1 + m2) / (m3 * mt)).sqrt();
        let b1 = -((m2 + m3) / (m1 * mt)).sqrt();
        let b2 = (m1 / ((m2 + m3) * mt)).sqrt();
        let a_end = [a1, a1, a3];
        let b_end = [b1, b2, b2];

        let a2: Mat3 = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];
        let k = (m1 * m2 * m3 / mt).sqrt();
        let mut atilde = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                atilde[i][j] = masses[j] / mt + k * a2[i][j] / masses[i];
            }
        }
        let cos2l: f64 = (0..3).map(|i| a_end[i] * masses[i] * b_end[i]).sum();
        let lambda = 0.5 * cos2l.clamp(-1.0, 1.0).acos();
        Ok(MassGeometry {
            masses,
            a_end,
            b_end,
            atilde,
            lambda,
        })
    }

    /// `x^T M y`.
    pub fn m_dot(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        (0..3).map(|i| x[i] * self.masses[i] * y[i]).sum()
    }

    pub fn m_vec(&self, x: &[f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|i| self.masses[i] * x[i])
    }

    pub fn apply_atilde(&self, x: &[f64; 3]) -> [f64; 3] {
        mat_vec(&self.atilde, x)
    }

    pub fn sin2l(&self) -> f64 {
        (2.0 * self.lambda).sin()
    }

    /// `S(s) = [sin(lambda(1-s)) a + sin(lambda(1+s)) b] / sin(2 lambda)`.
    pub fn shape_map(&self, s: f64) -> Result<[f64; 3]> {
        if !(-1.0..=1.0).contains(&s) {
            return domain(format!("shape coordinate must lie in [-1, 1], got {s}"));
        }
        Ok(self.shape_map_unchecked(s))
    }

    pub(crate) fn shape_map_unchecked(&self, s: f64) -> [f64; 3] {
        let l = self.lambda;
        let (ca, cb) = ((l * (1.0 - s)).sin(), (l * (1.0 + s)).sin());
        let d = self.sin2l();
        [0, 1, 2].map(|i| (ca * self.a_end[i] + cb * self.b_end[i]) / d)
    }

    /// `dS/ds`.
    pub fn shape_map_derivative(&self, s: f64) -> Result<[f64; 3]> {
        if !(-1.0..=1.0).contains(&s) {
            return domain(format!("shape coordinate must lie in [-1, 1], got {s}"));
        }
        let l = self.lambda;
        let (ca, cb) = (-l * (l * (1.0 - s)).cos(), l * (l * (1.0 + s)).cos());
        let d = self.sin2l();
        Ok([0, 1, 2].map(|i| (ca * self.a_end[i] + cb * self.b_end[i]) / d))
    }

    /// Inverse of the shape map for a unit, centred, ordered configuration.
    pub fn shape_inverse(&self, q: &[f64; 3]) -> Result<f64> {
        let ta = self.apply_atilde(&self.a_end);
        let theta = self.m_dot(q, &ta).atan2(self.m_dot(q, &self.a_end));
        let s = theta / self.lambda - 1.0;
        if !(s > -1.0 - 1e-12 && s < 1.0 + 1e-12) {
            return domain(format!("configuration {q:?} is outside the ordered shape interval"));
        }
        Ok(s.clamp(-1.0, 1.0))
    }
}

/// `sin(x)/x`, accurate near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))))
    } else {
        x.sin() / x
    }
}

/// Derivative of [`sinc`].
pub fn sinc_prime(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // sum_k (-1)^k 2k x^(2k-1) / (2k+1)!
        let x2 = x * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut pow = x;
        for k in 1..=6 {
            let kk = k as f64;
            term /= (2.0 * kk) * (2.0 * kk + 1.0);
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            sum += sign * 2.0 * kk * pow * term;
            pow *= x2;
        }
        sum
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// Pair sums `sum_ij c_ij f_ij` over the pair ordering (12, 23, 13).
fn pair_sum(c: [f64; 3], f: [f64; 3]) -> f64 {
    c[0] * f[0] + c[1] * f[1] + c[2] * f[2]
}

/// Values of a regularized potential and its first `s`-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegValue {
    pub value: f64,
    pub deriv: f64,
}

/// The shape potentials `U~(s)`, `V~(s)` with cached endpoint limits and critical shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapePotentials {
    pub geometry: MassGeometry,
    pub params: SystemParams,
    /// `(b2 - b1) / sin 2 lambda` and `(a3 - a2) / sin 2 lambda`.
    c12: f64,
    c23: f64,
    pub k_minus: f64,
    pub k_plus: f64,
    pub l_minus: f64,
    pub l_plus: f64,
    pub s_e: f64,
}

impl ShapePotentials {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let geometry = MassGeometry::new(params.masses())?;
        let d = geometry.sin2l();
        let c12 = (geometry.b_end[1] - geometry.b_end[0]) / d;
        let c23 = (geometry.a_end[2] - geometry.a_end[1]) / d;
        let lam = geometry.lambda;
        let (a, b) = (params.exp_a(), params.exp_b());
        let k_minus = params.alpha(Pair::P12) * (2.0 / (c12 * lam)).powf(a);
        let k_plus = params.alpha(Pair::P23) * (2.0 / (c23 * lam)).powf(a);
        let l_minus = params.beta(Pair::P12) * (2.0 / (c12 * lam)).powf(b);
        let l_plus = params.beta(Pair::P23) * (2.0 / (c23 * lam)).powf(b);
        let mut pot = ShapePotentials {
            geometry,
            params: params.clone(),
            c12,
            c23,
            k_minus,
            k_plus,
            l_minus,
            l_plus,
            s_e: f64::NAN,
        };
        pot.s_e = pot.find_critical_shape()?;
        Ok(pot)
    }

    pub fn lambda(&self) -> f64 {
        self.geometry.lambda
    }

    pub fn exp_a(&self) -> f64 {
        self.params.exp_a()
    }

    pub fn exp_b(&self) -> f64 {
        self.params.exp_b()
    }

    fn alphas(&self) -> [f64; 3] {
        Pair::ALL.map(|p| self.params.alpha(p))
    }

    fn betas(&self) -> [f64; 3] {
        Pair::ALL.map(|p| self.params.beta(p))
    }

    /// Separations of the unit configuration `S(s)`.
    pub fn separations(&self, s: f64) -> [f64; 3] {
        let l = self.geometry.lambda;
        let d12 = self.c12 * (l * (1.0 + s)).sin();
        let d23 = self.c23 * (l * (1.0 - s)).sin();
        [d12, d23, d12 + d23]
    }

    pub fn separations_prime(&self, s: f64) -> [f64; 3] {
        let l = self.geometry.lambda;
        let d12 = self.c12 * l * (l * (1.0 + s)).cos();
        let d23 = -self.c23 * l * (l * (1.0 - s)).cos();
        [d12, d23, d12 + d23]
    }

    fn check_open(s: f64) -> Result<()> {
        if !(s > -1.0 && s < 1.0) {
            return domain(format!("shape coordinate must lie in (-1, 1), got {s}"));
        }
        Ok(())
    }

    fn check_closed(s: f64) -> Result<()> {
        if !(-1.0..=1.0).contains(&s) {
            return domain(format!("shape coordinate must lie in [-1, 1], got {s}"));
        }
        Ok(())
    }

    fn plain(&self, coef: [f64; 3], p: f64, s: f64) -> Result<[f64; 3]> {
        Self::check_open(s)?;
        let d = self.separations(s);
        let dp = self.separations_prime(s);
        let l2 = self.geometry.lambda.powi(2);
        let f = d.map(|x| x.powf(-p));
        let f1 = [0, 1, 2].map(|k| -p * f[k] / d[k] * dp[k]);
        // d'' = -lambda^2 d
        let f2 = [0, 1, 2].map(|k| p * (p + 1.0) * f[k] / (d[k] * d[k]) * dp[k] * dp[k] + p * f[k] * l2);
        Ok([pair_sum(coef, f), pair_sum(coef, f1), pair_sum(coef, f2)])
    }

    /// `U~(s)` on the open interval.
    pub fn shape_u(&self, s: f64) -> Result<f64> {
        Ok(self.plain(self.alphas(), self.exp_a(), s)?[0])
    }

    /// `V~(s)` on the open interval.
    pub fn shape_v(&self, s: f64) -> Result<f64> {
        Ok(self.plain(self.betas(), self.exp_b(), s)?[0])
    }

    /// `(U~', U~'')`.
    pub fn shape_u_derivs(&self, s: f64) -> Result<(f64, f64)> {
        let v = self.plain(self.alphas(), self.exp_a(), s)?;
        Ok((v[1], v[2]))
    }

    /// `(V~', V~'')`.
    pub fn shape_v_derivs(&self, s: f64) -> Result<(f64, f64)> {
        let v = self.plain(self.betas(), self.exp_b(), s)?;
        Ok((v[1], v[2]))
    }

    /// `h_ij = phi / d_ij` and its derivative, finite on `[-1, 1]`.
    fn h_pairs(&self, s: f64) -> ([f64; 3], [f64; 3]) {
        let l = self.geometry.lambda;
        let x12 = l * (1.0 + s);
        let e12 = self.c12 * l * sinc(x12);
        let e12p = self.c12 * l * l * sinc_prime(x12);
        let x23 = l * (1.0 - s);
        let e23 = self.c23 * l * sinc(x23);
        let e23p = -self.c23 * l * l * sinc_prime(x23);
        let h12 = (1.0 - s) / e12;
        let h12p = -1.0 / e12 - (1.0 - s) * e12p / (e12 * e12);
        let h23 = (1.0 + s) / e23;
        let h23p = 1.0 / e23 - (1.0 + s) * e23p / (e23 * e23);
        let d = self.separations(s);
        let dp = self.separations_prime(s);
        let phi = 1.0 - s * s;
        let h13 = phi / d[2];
        let h13p = (-2.0 * s * d[2] - phi * dp[2]) / (d[2] * d[2]);
        ([h12, h23, h13], [h12p, h23p, h13p])
    }

    fn reg(&self, coef: [f64; 3], p: f64, s: f64) -> Result<RegValue> {
        Self::check_closed(s)?;
        let (h, hp) = self.h_pairs(s);
        let f = h.map(|x| x.powf(p));
        let f1 = [0, 1, 2].map(|k| p * h[k].powf(p - 1.0) * hp[k]);
        Ok(RegValue {
            value: pair_sum(coef, f),
            deriv: pair_sum(coef, f1),
        })
    }

    /// `phi^(p+1) times d/ds` of the plain potential, and its derivative.
    fn reg_prime(&self, coef: [f64; 3], p: f64, s: f64) -> Result<RegValue> {
        Self::check_closed(s)?;
        let (h, hp) = self.h_pairs(s);
        let dp = self.separations_prime(s);
        let d = self.separations(s);
        let l2 = self.geometry.lambda.powi(2);
        let f = [0, 1, 2].map(|k| -p * h[k].powf(p + 1.0) * dp[k]);
        let f1 = [0, 1, 2].map(|k| -p * ((p + 1.0) * h[k].powf(p) * hp[k] * dp[k] - h[k].powf(p + 1.0) * l2 * d[k]));
        Ok(RegValue {
            value: pair_sum(coef, f),
            deriv: pair_sum(coef, f1),
        })
    }

    /// `(1 - s^2)^a U~(s)` on the closed interval, with its derivative.
    pub fn regularized_u(&self, s: f64) -> Result<RegValue> {
        self.reg(self.alphas(), self.exp_a(), s)
    }

    /// `(1 - s^2)^b V~(s)` on the closed interval, with its derivative.
    pub fn regularized_v(&self, s: f64) -> Result<RegValue> {
        self.reg(self.betas(), self.exp_b(), s)
    }

    /// `(1 - s^2)^(a+1) U~'(s)` on the closed interval, with its derivative.
    pub fn regularized_u_prime(&self, s: f64) -> Result<RegValue> {
        self.reg_prime(self.alphas(), self.exp_a(), s)
    }

    /// `(1 - s^2)^(b+1) V~'(s)` on the closed interval, with its derivative.
    pub fn regularized_v_prime(&self, s: f64) -> Result<RegValue> {
        self.reg_prime(self.betas(), self.exp_b(), s)
    }

    /// `(1 - s^2) V~'/V~` on the closed interval, with its derivative.
    pub fn log_derivative_v(&self, s: f64) -> Result<RegValue> {
        let v = self.regularized_v(s)?;
        let vp = self.regularized_v_prime(s)?;
        Ok(RegValue {
            value: vp.value / v.value,
            deriv: (vp.deriv * v.value - vp.value * v.deriv) / (v.value * v.value),
        })
    }

    /// Sign changes of `U~'` on a uniform grid over `[-1 + delta, 1 - delta]`.
    pub fn critical_shape_scan(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        let delta = 1e-6;
        let n = n.max(2);
        let grid: Vec<f64> = (0..=n)
            .map(|k| -1.0 + delta + (2.0 - 2.0 * delta) * k as f64 / n as f64)
            .collect();
        let mut brackets = Vec::new();
        let mut prev = (grid[0], self.shape_u_derivs(grid[0])?.0);
        for &s in &grid[1..] {
            let cur = (s, self.shape_u_derivs(s)?.0);
            if prev.1 == 0.0 {
                brackets.push((prev.0, prev.0));
            } else if prev.1 * cur.1 < 0.0 {
                brackets.push((prev.0, cur.0));
            }
            prev = cur;
        }
        Ok(brackets)
    }

    /// Critical point of `U~`: bisection on `U~'` then Newton polish.
    pub fn find_critical_shape(&self) -> Result<f64> {
        let delta = 1e-6;
        let (mut lo, mut hi) = (-1.0 + delta, 1.0 - delta);
        let g = |s: f64| self.shape_u_derivs(s).map(|d| d.0);
        let (glo, ghi) = (g(lo)?, g(hi)?);
        if !(glo < 0.0 && ghi > 0.0) {
            return Err(Error::Analysis(format!(
                "no sign change of U~' on [{lo}, {hi}] ({glo}, {ghi})"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid)?;
            if gm == 0.0 {
                return Ok(mid);
            }
            if gm < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-10 {
                break;
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..20 {
            let (d1, d2) = self.shape_u_derivs(s)?;
            if d1.abs() <= 1e-13 * d2.abs() {
                break;
            }
            let next = s - d1 / d2;
            if !(next > lo - 1e-9 && next < hi + 1e-9) {
                break;
            }
            s = next;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fig2() -> SystemParams {
        SystemParams::reference_symmetric()
    }

    fn asym() -> SystemParams {
        SystemParams::new([1.0, 1.0, 2.0], [1.0, 1.3, 0.7], [0.5, 0.4, 0.9], 6.0, 12.0, 0.0).unwrap()
    }

    #[test]
    fn equal_mass_endpoints() {
        let g = MassGeometry::new([1.0; 3]).unwrap();
        let r6 = 6f64.sqrt();
        let a = [-1.0 / r6, -1.0 / r6, 2.0 / r6];
        let b = [-(2.0f64 / 3.0).sqrt(), 1.0 / r6, 1.0 / r6];
        for i in 0..3 {
            assert!((g.a_end[i] - a[i]).abs() < 1e-15);
            assert!((g.b_end[i] - b[i]).abs() < 1e-15);
        }
        assert!((g.m_dot(&g.a_end, &g.b_end) - 0.5).abs() < 1e-15);
        assert!((g.lambda - PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn shape_map_endpoints_are_collisions() {
        let g = MassGeometry::new([1.0, 2.0, 3.0]).unwrap();
        let lo = g.shape_map(-1.0).unwrap();
        let hi = g.shape_map(1.0).unwrap();
        for i in 0..3 {
            assert!((lo[i] - g.a_end[i]).abs() < 1e-15);
            assert!((hi[i] - g.b_end[i]).abs() < 1e-15);
        }
        assert!((lo[1] - lo[0]).abs() < 1e-15);
        assert!((hi[2] - hi[1]).abs() < 1e-15);
        assert!(g.shape_map(1.0 + 1e-9).is_err());
    }

    #[test]
    fn shape_map_is_a_unit_curve_and_inverts() {
        let g = MassGeometry::new([0.7, 2.2, 1.3]).unwrap();
        for k in 0..=20 {
            let s = -1.0 + 0.1 * k as f64;
            let q = g.shape_map(s).unwrap();
            assert!((g.m_dot(&q, &q) - 1.0).abs() < 1e-14);
            assert!(g.m_vec(&q).iter().sum::<f64>().abs() < 1e-14);
            assert!((g.shape_inverse(&q).unwrap() - s).abs() < 1e-13);
        }
    }

    #[test]
    fn sinc_series_matches_direct_form() {
        for x in [0.09, 0.05, 1e-3] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
            let direct = (x * x.cos() - x.sin()) / (x * x);
            assert!((sinc_prime(x) - direct).abs() < 1e-12 * (1.0 + 1.0 / (x * x)) * 1e-3);
        }
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(sinc_prime(0.0), 0.0);
        for x in [0.0999999, 0.1000001] {
            assert!((sinc_prime(x) + x / 3.0 - x.powi(3) / 30.0).abs() < 1e-7);
        }
    }

    #[test]
    fn reference_values() {
        let pot = ShapePotentials::new(&fig2()).unwrap();
        assert!((pot.lambda() - 0.6154797086703874).abs() < 1e-15);
        assert!((pot.shape_u(0.0).unwrap() - 16.25).abs() < 1e-12);
        assert!((pot.shape_v(0.0).unwrap() - 64.015625).abs() < 1e-11);
        assert_eq!(pot.s_e, 0.0);
        assert_eq!(pot.shape_u_derivs(0.0).unwrap().0, 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let pot = ShapePotentials::new(&asym()).unwrap();
        let h = 1e-4;
        for k in 0..50 {
            let s = -0.95 + 1.9 * k as f64 / 49.0;
            let fd = |f: &dyn Fn(f64) -> f64| {
                (-f(s + 2.0 * h) + 8.0 * f(s + h) - 8.0 * f(s - h) + f(s - 2.0 * h)) / (12.0 * h)
            };
            let u = |x: f64| pot.shape_u(x).unwrap();
            let up = |x: f64| pot.shape_u_derivs(x).unwrap().0;
            let v = |x: f64| pot.shape_v(x).unwrap();
            let (u1, u2) = pot.shape_u_derivs(s).unwrap();
            let v1 = pot.shape_v_derivs(s).unwrap().0;
            let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / scale.max(1.0);
            assert!(rel(u1, fd(&u), u1.abs()) < 1e-6, "U' at {s}");
            assert!(rel(u2, fd(&up), u2.abs()) < 1e-6, "U'' at {s}");
            assert!(rel(v1, fd(&v), v1.abs()) < 1e-6, "V' at {s}");
            let regs: [(&str, &dyn Fn(f64) -> RegValue); 4] = [
                ("Ureg", &|x| pot.regularized_u(x).unwrap()),
                ("Upr", &|x| pot.regularized_u_prime(x).unwrap()),
                ("Vreg", &|x| pot.regularized_v(x).unwrap()),
                ("Vpr", &|x| pot.regularized_v_prime(x).unwrap()),
            ];
            for (name, reg) in regs {
                let analytic = reg(s).deriv;
                let numeric = fd(&|x| reg(x).value);
                assert!(rel(analytic, numeric, analytic.abs()) < 1e-6, "{name}' at {s}");
            }
        }
    }

    #[test]
    fn regularized_forms_agree_in_the_interior() {
        let pot = ShapePotentials::new(&asym()).unwrap();
        let (a, b) = (pot.exp_a(), pot.exp_b());
        for s in [-0.9, -0.3, 0.0, 0.4, 0.8] {
            let phi: f64 = 1.0 - s * s;
            let u = pot.shape_u(s).unwrap();
            let v = pot.shape_v(s).unwrap();
            let (u1, _) = pot.shape_u_derivs(s).unwrap();
            let (v1, _) = pot.shape_v_derivs(s).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-13 * y.abs().max(1.0);
            assert!(close(pot.regularized_u(s).unwrap().value, phi.powf(a) * u));
            assert!(close(pot.regularized_v(s).unwrap().value, phi.powf(b) * v));
            assert!(close(pot.regularized_u_prime(s).unwrap().value, phi.powf(a + 1.0) * u1));
            assert!(close(pot.regularized_v_prime(s).unwrap().value, phi.powf(b + 1.0) * v1));
        }
    }

    #[test]
    fn endpoint_limits_and_slopes() {
        let pot = ShapePotentials::new(&asym()).unwrap();
        let a = pot.exp_a();
        let lo = pot.regularized_u(-1.0).unwrap();
        let hi = pot.regularized_u(1.0).unwrap();
        assert!((lo.value - pot.k_minus).abs() < 1e-10 * pot.k_minus);
        assert!((hi.value - pot.k_plus).abs() < 1e-10 * pot.k_plus);
        assert!((lo.deriv + 0.5 * a * pot.k_minus).abs() < 1e-9 * pot.k_minus);
        assert!((hi.deriv - 0.5 * a * pot.k_plus).abs() < 1e-9 * pot.k_plus);
        let b = pot.exp_b();
        let vlo = pot.regularized_v(-1.0).unwrap();
        assert!((vlo.value - pot.l_minus).abs() < 1e-10 * pot.l_minus);
        assert!((vlo.deriv + 0.5 * b * pot.l_minus).abs() < 1e-9 * pot.l_minus);
        assert!(pot.regularized_u(1.0 + 1e-12).is_err());
        assert!(pot.shape_u(1.0).is_err());
    }

    #[test]
    fn endpoint_continuity_trend() {
        let pot = ShapePotentials::new(&asym()).unwrap();
        let mut last = f64::INFINITY;
        for eps in [1e-4, 1e-6, 1e-8] {
            let gap = (pot.regularized_u(1.0 - eps).unwrap().value - pot.k_plus).abs();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-6 * pot.k_plus);
    }

    #[test]
    fn symmetric_potentials_are_even() {
        let pot = ShapePotentials::new(&fig2()).unwrap();
        for s in [0.1, 0.37, 0.8] {
            assert!((pot.shape_u(s).unwrap() - pot.shape_u(-s).unwrap()).abs() < 1e-12);
            assert!((pot.shape_v(s).unwrap() - pot.shape_v(-s).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn asymmetric_critical_shape_matches_grid_scan() {
        let pot = ShapePotentials::new(
            &SystemParams::new([1.0, 1.0, 2.0], [1.0, 1.0, 2.0], [0.5, 0.5, 1.0], 6.0, 12.0, 0.0).unwrap(),
        )
        .unwrap();
        let brackets = pot.critical_shape_scan(20_000).unwrap();
        assert_eq!(brackets.len(), 1);
        let (lo, hi) = brackets[0];
        assert!(pot.s_e >= lo && pot.s_e <= hi);
        let (d1, d2) = pot.shape_u_derivs(pot.s_e).unwrap();
        assert!(d1.abs() < 1e-12 * d2.abs());
        assert!(d2 > 0.0);
        assert!(pot.s_e != 0.0);
    }
}
