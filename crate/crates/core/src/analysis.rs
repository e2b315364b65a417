//! Equilibria, Jacobians and their spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    positive_energy_field, positive_energy_gradient, reduced_jacobian, reduced_zero_energy_field, PositiveEnergyState,
};
use crate::error::{domain, Error, Result};
use crate::field::{Chart, VectorField};
use crate::shape::ShapePotentials;

/// Eigenvalues with `|Re| <` this count as central.
pub const HYPERBOLICITY_TOL: f64 = 1e-8;

/// Jacobian estimate with a per-entry error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEstimate<const N: usize> {
    pub matrix: [[f64; N]; N],
    pub error: [[f64; N]; N],
}

/// Central differences with one Richardson extrapolation step.
///
/// `scale[j]` sets the base step of coordinate `j`. Where a central stencil
/// leaves the field's domain (or `forward[j]` is set) a forward stencil is used.
pub fn numerical_jacobian<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    point: &[f64; N],
    scale: &[f64; N],
    forward: &[bool; N],
) -> Result<JacobianEstimate<N>> {
    let f0 = field.eval(point)?;
    let mut matrix = [[0.0; N]; N];
    let mut error = [[0.0; N]; N];
    for j in 0..N {
        let at = |dx: f64| {
            let mut x = *point;
            x[j] += dx;
            field.eval(&x)
        };
        let central = |h: f64| -> Result<[f64; N]> {
            let (p, m) = (at(h)?, at(-h)?);
            let mut d = [0.0; N];
            for i in 0..N {
                d[i] = (p[i] - m[i]) / (2.0 * h);
            }
            Ok(d)
        };
        let one_sided = |h: f64| -> Result<[f64; N]> {
            let p = at(h)?;
            let mut d = [0.0; N];
            for i in 0..N {
                d[i] = (p[i] - f0[i]) / h;
            }
            Ok(d)
        };
        let h = scale[j];
        let use_central = !forward[j] && at(h).is_ok() && at(-h).is_ok();
        let (coarse, fine, order) = if use_central {
            (central(h)?, central(0.5 * h)?, 2)
        } else {
            let sign = if at(h).is_ok() { 1.0 } else { -1.0 };
            (one_sided(sign * h)?, one_sided(0.5 * sign * h)?, 1)
        };
        let k = f64::from(1u32 << order);
        for i in 0..N {
            let rich = (k * fine[i] - coarse[i]) / (k - 1.0);
            matrix[i][j] = rich;
            error[i][j] = (rich - fine[i]).abs();
        }
    }
    Ok(JacobianEstimate { matrix, error })
}

/// Eigenvalues of a small real square matrix, sorted by real then imaginary part.
///
/// The 1x1 and 2x2 cases are closed form; larger matrices use the Francis QR
/// iteration, which stays accurate for repeated semisimple eigenvalues.
pub fn eigen_small(m: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let n = m.len();
    if n == 0 || m.iter().any(|row| row.len() != n) {
        return Err(Error::Analysis("eigen_small needs a nonempty square matrix".into()));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Analysis("matrix has non-finite entries".into()));
    }
    let mut eig = match n {
        1 => vec![Complex64::new(m[0][0], 0.0)],
        2 => {
            let tr = m[0][0] + m[1][1];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            quadratic_roots(tr, det)
        }
        _ => {
            let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
            mat.complex_eigenvalues().iter().copied().collect()
        }
    };
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eig)
}

/// Roots of `x^2 - tr x + det`, avoiding cancellation.
fn quadratic_roots(tr: f64, det: f64) -> Vec<Complex64> {
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        let sign = if tr < 0.0 { -1.0 } else { 1.0 };
        let q = 0.5 * tr + sign * disc.sqrt();
        let other = if q != 0.0 { det / q } else { 0.0 };
        vec![Complex64::new(q, 0.0), Complex64::new(other, 0.0)]
    } else {
        let im = (-disc).sqrt();
        vec![Complex64::new(0.5 * tr, -im), Complex64::new(0.5 * tr, im)]
    }
}

/// Unit null vector of `m - xi I` for a real eigenvalue `xi`.
pub fn real_eigenvector(m: &[Vec<f64>], xi: f64) -> Result<Vec<f64>> {
    let n = m.len();
    let shifted = DMatrix::from_fn(n, n, |i, j| m[i][j] - if i == j { xi } else { 0.0 });
    let svd = shifted.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Analysis("singular value decomposition failed".into()))?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let v: DVector<f64> = vt.row(k).transpose();
    let mut v: Vec<f64> = v.iter().copied().collect();
    // fix the sign so the largest component is positive
    let big = v
        .iter()
        .copied()
        .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(v)
}

fn eig_to_pairs(e: &[Complex64]) -> Vec<[f64; 2]> {
    e.iter().map(|z| [z.re, z.im]).collect()
}

/// Linearization summary of one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub chart: Chart,
    pub location: Vec<f64>,
    /// `(re, im)` pairs sorted by real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub stable_dim: usize,
    pub unstable_dim: usize,
    pub center_dim: usize,
    pub jacobian: Vec<Vec<f64>>,
}

impl EquilibriumReport {
    pub fn from_jacobian(chart: Chart, location: Vec<f64>, jacobian: Vec<Vec<f64>>) -> Result<Self> {
        let eig = eigen_small(&jacobian)?;
        let stable_dim = eig.iter().filter(|z| z.re < -HYPERBOLICITY_TOL).count();
        let unstable_dim = eig.iter().filter(|z| z.re > HYPERBOLICITY_TOL).count();
        Ok(EquilibriumReport {
            chart,
            location,
            eigenvalues: eig_to_pairs(&eig),
            stable_dim,
            unstable_dim,
            center_dim: eig.len() - stable_dim - unstable_dim,
            jacobian,
        })
    }

    pub fn eigenvalues_complex(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    }

    /// Signs of the eigenvalue real parts in ascending order (`-1`, `0`, `1`).
    pub fn sign_pattern(&self) -> Vec<i8> {
        self.eigenvalues
            .iter()
            .map(|p| {
                if p[0] > HYPERBOLICITY_TOL {
                    1
                } else if p[0] < -HYPERBOLICITY_TOL {
                    -1
                } else {
                    0
                }
            })
            .collect()
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.center_dim == 0
    }
}

/// The 1+1+1 rest points `P- = (-sqrt(2 U~(s_e)), s_e, 0)` and `P+` of the reduced flow.
pub fn equilibria_h0(pot: &ShapePotentials) -> Result<([f64; 3], [f64; 3])> {
    let s_e = pot.s_e;
    let y = (2.0 * pot.shape_u(s_e)?).sqrt();
    Ok(([-y, s_e, 0.0], [y, s_e, 0.0]))
}

/// Coefficients `(c1, c0)` of the `s`-`w` characteristic polynomial `xi^2 + c1 xi + c0` at `P+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwPolynomial {
    /// From the trace and determinant of the derived Jacobian block.
    pub derived: [f64; 2],
    /// The opposite sign convention, linear coefficient `+(a/2 - 1) phi^a sqrt(2 U~)`.
    pub alternate: [f64; 2],
}

/// Linearization at both 1+1+1 rest points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PReport {
    pub plus: EquilibriumReport,
    pub minus: EquilibriumReport,
    pub s_e: f64,
    /// `y`-direction eigenvalue at `P+`, read off the decoupled row.
    pub xi1: f64,
    /// `-(1 - s_e^2)^a sqrt(2 U~(s_e))`, the same quantity without the `(b - a)` factor.
    pub xi1_unscaled: f64,
    /// Product of the two `s`-`w` eigenvalues at `P+`.
    pub sw_product: f64,
    /// `-(1 - s_e^2)^(2a) U~''(s_e) / lambda^2`.
    pub sw_product_formula: f64,
    pub sw_polynomial: SwPolynomial,
}

fn mat3_rows(j: [[f64; 3]; 3]) -> Vec<Vec<f64>> {
    j.iter().map(|r| r.to_vec()).collect()
}

/// Eigenstructure at `P+` and `P-`.
#[allow(non_snake_case)]
pub fn classify_P(pot: &ShapePotentials) -> Result<PReport> {
    let (pm, pp) = equilibria_h0(pot)?;
    let (a, lam) = (pot.exp_a(), pot.lambda());
    let jp = reduced_jacobian(&pp, pot)?;
    let jm = reduced_jacobian(&pm, pot)?;
    let plus = EquilibriumReport::from_jacobian(Chart::Reduced, pp.to_vec(), mat3_rows(jp))?;
    let minus = EquilibriumReport::from_jacobian(Chart::Reduced, pm.to_vec(), mat3_rows(jm))?;
    let s_e = pot.s_e;
    let phi = 1.0 - s_e * s_e;
    let ue = pot.shape_u(s_e)?;
    let (_, u2) = pot.shape_u_derivs(s_e)?;
    let sw = [vec![jp[1][1], jp[1][2]], vec![jp[2][1], jp[2][2]]];
    let sw_eig = eigen_small(&sw)?;
    let sw_product = (sw_eig[0] * sw_eig[1]).re;
    let tr = jp[1][1] + jp[2][2];
    let det = jp[1][1] * jp[2][2] - jp[1][2] * jp[2][1];
    let c0 = -phi.powf(2.0 * a) * u2 / (lam * lam);
    Ok(PReport {
        plus,
        minus,
        s_e,
        xi1: jp[0][0],
        xi1_unscaled: -phi.powf(a) * (2.0 * ue).sqrt(),
        sw_product,
        sw_product_formula: c0,
        sw_polynomial: SwPolynomial {
            derived: [-tr, det],
            alternate: [(0.5 * a - 1.0) * phi.powf(a) * (2.0 * ue).sqrt(), c0],
        },
    })
}

/// `y(sigma) = sqrt(2 U~(0)) tanh(k sigma)` with `k = (b - a) sqrt(U~(0)/2)`, the
/// connection from `P-` to `P+` along the invariant line `{s = 0, w = 0}`.
pub fn heteroclinic_closed_form(pot: &ShapePotentials, sigma: f64) -> Result<f64> {
    let (amp, k) = heteroclinic_constants(pot)?;
    Ok(amp * (k * sigma).tanh())
}

/// `(amplitude, rate)` of the closed-form heteroclinic.
pub fn heteroclinic_constants(pot: &ShapePotentials) -> Result<(f64, f64)> {
    if !pot.params.is_mass_symmetric() {
        return domain("the closed-form heteroclinic needs mass-symmetric parameters");
    }
    let u0 = pot.shape_u(0.0)?;
    let c = pot.exp_b() - pot.exp_a();
    Ok(((2.0 * u0).sqrt(), c * (0.5 * u0).sqrt()))
}

/// The six equilibrium families of the flow on `N_h`, in coordinates `(vt, st, ut)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HposFamily {
    /// `(+sqrt(2h), st, 0)`, parameterized by `st`.
    NPlus,
    /// `(-sqrt(2h), st, 0)`.
    NMinus,
    /// `(vt, 1, +sqrt(2h - vt^2))`, parameterized by `vt`.
    DPlusOnePlus,
    DPlusOneMinus,
    /// `(vt, -1, +-sqrt(2h - vt^2))`.
    DMinusOnePlus,
    DMinusOneMinus,
}

impl HposFamily {
    pub const ALL: [HposFamily; 6] = [
        HposFamily::NPlus,
        HposFamily::NMinus,
        HposFamily::DPlusOnePlus,
        HposFamily::DPlusOneMinus,
        HposFamily::DMinusOnePlus,
        HposFamily::DMinusOneMinus,
    ];

    /// Member with parameter `t in [-1, 1]` (`st` for `N`, `vt / sqrt(2h)` for `D`).
    pub fn point(self, h: f64, t: f64) -> [f64; 3] {
        let v = (2.0 * h).sqrt();
        let tv = t.clamp(-1.0, 1.0) * v;
        let ut = (2.0 * h - tv * tv).max(0.0).sqrt();
        match self {
            HposFamily::NPlus => [v, t, 0.0],
            HposFamily::NMinus => [-v, t, 0.0],
            HposFamily::DPlusOnePlus => [tv, 1.0, ut],
            HposFamily::DPlusOneMinus => [tv, 1.0, -ut],
            HposFamily::DMinusOnePlus => [tv, -1.0, ut],
            HposFamily::DMinusOneMinus => [tv, -1.0, -ut],
        }
    }

    /// `N_h+-` correspond to 1+1+1 escape.
    pub fn is_triple_escape(self) -> bool {
        matches!(self, HposFamily::NPlus | HposFamily::NMinus)
    }
}

/// Dense samples of every family; errors for `h <= 0`.
pub fn equilibria_hpos(h: f64, samples: usize) -> Result<Vec<(HposFamily, [f64; 3])>> {
    if !(h > 0.0) {
        return domain(format!("positive-energy equilibria need h > 0, got {h}"));
    }
    let n = samples.max(2);
    let mut out = Vec::with_capacity(6 * n);
    for fam in HposFamily::ALL {
        for k in 0..n {
            out.push((fam, fam.point(h, -1.0 + 2.0 * k as f64 / (n - 1) as f64)));
        }
    }
    Ok(out)
}

/// Orthonormal basis of the hyperplane orthogonal to `grad` (Gram-Schmidt on the
/// coordinate axes, dropping the axis most aligned with `grad`).
pub fn tangent_basis<const N: usize>(grad: &[f64; N]) -> Vec<[f64; N]> {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let n: [f64; N] = grad.map(|g| g / norm);
    let drop = (0..N)
        .max_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs()))
        .expect("N > 0");
    let mut basis: Vec<[f64; N]> = Vec::with_capacity(N - 1);
    for k in (0..N).filter(|&k| k != drop) {
        let mut e = [0.0; N];
        e[k] = 1.0;
        for b in std::iter::once(&n).chain(basis.iter()) {
            let d: f64 = (0..N).map(|i| e[i] * b[i]).sum();
            for i in 0..N {
                e[i] -= d * b[i];
            }
        }
        let en = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(e.map(|x| x / en));
    }
    basis
}

/// `B^T J B` for an orthonormal basis `B` given as columns.
pub fn restrict<const N: usize>(j: &[[f64; N]; N], basis: &[[f64; N]]) -> Vec<Vec<f64>> {
    let k = basis.len();
    let mut out = vec![vec![0.0; k]; k];
    for (r, br) in basis.iter().enumerate() {
        for (c, bc) in basis.iter().enumerate() {
            let mut acc = 0.0;
            for i in 0..N {
                for l in 0..N {
                    acc += br[i] * j[i][l] * bc[l];
                }
            }
            out[r][c] = acc;
        }
    }
    out
}

struct PositiveFieldAt<'a> {
    pot: &'a ShapePotentials,
}

impl VectorField<4> for PositiveFieldAt<'_> {
    fn eval(&self, x: &[f64; 4]) -> Result<[f64; 4]> {
        Ok(positive_energy_field(&PositiveEnergyState::from_array(x), self.pot)?.to_array())
    }
}

/// Spectrum of the positive-energy field at `c+-(st) = (0, +-sqrt(2h), st, 0)`
/// restricted to the tangent space of the energy level.
pub fn restricted_spectrum_hpos(pot: &ShapePotentials, h: f64, st: f64, sign: f64) -> Result<EquilibriumReport> {
    if !(h > 0.0) {
        return domain(format!("positive-energy equilibria need h > 0, got {h}"));
    }
    restricted_spectrum_at(pot, &[0.0, sign.signum() * (2.0 * h).sqrt(), st, 0.0])
}

/// Spectrum of the positive-energy field at any point, restricted to the tangent
/// space of its energy level. `Rt` is differenced forward.
pub fn restricted_spectrum_at(pot: &ShapePotentials, x: &[f64; 4]) -> Result<EquilibriumReport> {
    let x = *x;
    let field = PositiveFieldAt { pot };
    let est = numerical_jacobian(&field, &x, &[1e-4; 4], &[true, false, false, false])?;
    let grad = positive_energy_gradient(&PositiveEnergyState::from_array(&x), pot)?;
    let basis = tangent_basis(&grad);
    let jt = restrict(&est.matrix, &basis);
    EquilibriumReport::from_jacobian(Chart::PositiveEnergy, x.to_vec(), jt)
}

/// Residual of the reduced field at a point (max norm).
pub fn reduced_residual(x: &[f64; 3], pot: &ShapePotentials) -> Result<f64> {
    Ok(reduced_zero_energy_field(x, pot)?
        .iter()
        .fold(0.0, |m, v| m.max(v.abs())))
}
