//! Cartesian physics of three particles on a line.
//!
//! Particles are ordered `q1 < q2 < q3` and interact pairwise through
//! `W(r) = -alpha / r^a + beta / r^b` with `4 < a < b - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::field::{Chart, VectorField};

/// Identifies one of the three particle pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    P12,
    P23,
    P13,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::P12, Pair::P23, Pair::P13];

    /// Particle indices `(i, j)` with `i < j`.
    pub fn indices(self) -> (usize, usize) {
        match self {
            Pair::P12 => (0, 1),
            Pair::P23 => (1, 2),
            Pair::P13 => (0, 2),
        }
    }

    pub(crate) fn slot(self) -> usize {
        match self {
            Pair::P12 => 0,
            Pair::P23 => 1,
            Pair::P13 => 2,
        }
    }
}

/// Raw, unvalidated parameter record used for deserialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub masses: [f64; 3],
    /// Attractive couplings in the order (12, 23, 13).
    pub alpha: [f64; 3],
    /// Repulsive couplings in the order (12, 23, 13).
    pub beta: [f64; 3],
    pub exp_a: f64,
    pub exp_b: f64,
    #[serde(default)]
    pub h: f64,
}

/// Validated physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    masses: [f64; 3],
    alpha: [f64; 3],
    beta: [f64; 3],
    exp_a: f64,
    exp_b: f64,
    h: f64,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        SystemParams::new(raw.masses, raw.alpha, raw.beta, raw.exp_a, raw.exp_b, raw.h)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams {
            masses: p.masses,
            alpha: p.alpha,
            beta: p.beta,
            exp_a: p.exp_a,
            exp_b: p.exp_b,
            h: p.h,
        }
    }
}

impl SystemParams {
    pub fn new(masses: [f64; 3], alpha: [f64; 3], beta: [f64; 3], exp_a: f64, exp_b: f64, h: f64) -> Result<Self> {
        let bad = |what: &str| Err(Error::InvalidParams(what.to_string()));
        if !masses.iter().all(|m| m.is_finite() && *m > 0.0) {
            return bad("masses must be positive and finite");
        }
        if !alpha.iter().all(|v| v.is_finite() && *v > 0.0) {
            return bad("attractive couplings must be positive and finite");
        }
        if !beta.iter().all(|v| v.is_finite() && *v > 0.0) {
            return bad("repulsive couplings must be positive and finite");
        }
        if !(exp_a.is_finite() && exp_b.is_finite() && 4.0 < exp_a && exp_a < exp_b - 1.0) {
            return Err(Error::InvalidParams(format!(
                "exponents must satisfy 4 < a < b - 1 (got a = {exp_a}, b = {exp_b})"
            )));
        }
        if !h.is_finite() {
            return bad("energy level must be finite");
        }
        Ok(SystemParams {
            masses,
            alpha,
            beta,
            exp_a,
            exp_b,
            h,
        })
    }

    /// Parameters from Lennard-Jones well depths `eps_ij` and zero crossings `r0_ij`,
    /// so that `alpha = 4 eps r0^a` and `beta = 4 eps r0^b`.
    pub fn lennard_jones(
        masses: [f64; 3],
        eps: [f64; 3],
        r0: [f64; 3],
        exp_a: f64,
        exp_b: f64,
        h: f64,
    ) -> Result<Self> {
        let alpha = [0, 1, 2].map(|k| 4.0 * eps[k] * r0[k].powf(exp_a));
        let beta = [0, 1, 2].map(|k| 4.0 * eps[k] * r0[k].powf(exp_b));
        SystemParams::new(masses, alpha, beta, exp_a, exp_b, h)
    }

    /// The mass-symmetric 6-12 reference molecule: m = (1, 2, 1),
    /// alpha = (1, 1, 2), beta = (0.5, 0.5, 1), at zero energy.
    pub fn reference_symmetric() -> Self {
        SystemParams::new([1.0, 2.0, 1.0], [1.0, 1.0, 2.0], [0.5, 0.5, 1.0], 6.0, 12.0, 0.0)
            .expect("reference parameters are valid")
    }

    pub fn masses(&self) -> [f64; 3] {
        self.masses
    }

    pub fn alpha(&self, pair: Pair) -> f64 {
        self.alpha[pair.slot()]
    }

    pub fn beta(&self, pair: Pair) -> f64 {
        self.beta[pair.slot()]
    }

    pub fn exp_a(&self) -> f64 {
        self.exp_a
    }

    pub fn exp_b(&self) -> f64 {
        self.exp_b
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Copy with a different energy level.
    pub fn with_energy(&self, h: f64) -> Result<Self> {
        let mut p = self.clone();
        if !h.is_finite() {
            return Err(Error::InvalidParams("energy level must be finite".into()));
        }
        p.h = h;
        Ok(p)
    }

    /// `m1 = m3`, `alpha12 = alpha23` and `beta12 = beta23`.
    pub fn is_mass_symmetric(&self) -> bool {
        self.masses[0] == self.masses[2] && self.alpha[0] == self.alpha[1] && self.beta[0] == self.beta[1]
    }

    /// Pair potential for one pair.
    pub fn pair_potential(&self, pair: Pair, r: f64) -> Result<f64> {
        pair_potential(r, self.alpha(pair), self.beta(pair), self.exp_a, self.exp_b)
    }

    /// Location of the minimum of the isolated pair potential.
    pub fn pair_minimum(&self, pair: Pair) -> f64 {
        let (a, b) = (self.exp_a, self.exp_b);
        (self.beta(pair) * b / (self.alpha(pair) * a)).powf(1.0 / (b - a))
    }
}

/// `W(r) = -alpha r^-a + beta r^-b`.
pub fn pair_potential(r: f64, alpha: f64, beta: f64, a: f64, b: f64) -> Result<f64> {
    if !(r > 0.0) {
        return domain(format!("pair separation must be positive, got {r}"));
    }
    Ok(-alpha * r.powf(-a) + beta * r.powf(-b))
}

/// `dW/dr`.
pub fn pair_potential_derivative(r: f64, alpha: f64, beta: f64, a: f64, b: f64) -> Result<f64> {
    if !(r > 0.0) {
        return domain(format!("pair separation must be positive, got {r}"));
    }
    Ok(a * alpha * r.powf(-a - 1.0) - b * beta * r.powf(-b - 1.0))
}

/// Positions and momenta of the three particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub q: [f64; 3],
    pub p: [f64; 3],
}

impl CartesianState {
    pub fn new(q: [f64; 3], p: [f64; 3]) -> Self {
        CartesianState { q, p }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.q[0], self.q[1], self.q[2], self.p[0], self.p[1], self.p[2]]
    }

    pub fn from_array(x: &[f64; 6]) -> Self {
        CartesianState {
            q: [x[0], x[1], x[2]],
            p: [x[3], x[4], x[5]],
        }
    }

    /// Separation of a pair; positive when the ordering holds.
    pub fn separation(&self, pair: Pair) -> f64 {
        let (i, j) = pair.indices();
        self.q[j] - self.q[i]
    }

    /// Residual of the mass-symmetric central-configuration subspace
    /// `q2 = p2 = 0, q1 + q3 = 0, p1 + p3 = 0`.
    pub fn cc_residual(&self) -> f64 {
        [
            self.q[1].abs(),
            self.p[1].abs(),
            (self.q[0] + self.q[2]).abs(),
            (self.p[0] + self.p[2]).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

const COLLISION_GUARD: f64 = 1e-12;

fn check_ordered(state: &CartesianState) -> Result<()> {
    let scale = 1.0 + state.q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d12 = state.separation(Pair::P12);
    let d23 = state.separation(Pair::P23);
    if !(d12.is_finite() && d23.is_finite()) || d12.min(d23) < COLLISION_GUARD * scale {
        return domain(format!(
            "configuration must satisfy q1 < q2 < q3 without collisions (q = {:?})",
            state.q
        ));
    }
    Ok(())
}

/// Total potential `W(q) = -U(q) + V(q)`.
pub fn potential_energy(q: &[f64; 3], params: &SystemParams) -> Result<f64> {
    let state = CartesianState::new(*q, [0.0; 3]);
    check_ordered(&state)?;
    Pair::ALL
        .iter()
        .map(|&pair| params.pair_potential(pair, state.separation(pair)))
        .sum()
}

/// `H = p^T M^-1 p / 2 + W(q)`.
pub fn hamiltonian_energy(state: &CartesianState, params: &SystemParams) -> Result<f64> {
    let m = params.masses();
    let kinetic: f64 = (0..3).map(|i| 0.5 * state.p[i] * state.p[i] / m[i]).sum();
    Ok(kinetic + potential_energy(&state.q, params)?)
}

/// Gradient of `W` with respect to the positions.
pub fn potential_gradient(q: &[f64; 3], params: &SystemParams) -> Result<[f64; 3]> {
    let state = CartesianState::new(*q, [0.0; 3]);
    check_ordered(&state)?;
    let mut grad = [0.0; 3];
    for pair in Pair::ALL {
        let (i, j) = pair.indices();
        let dw = pair_potential_derivative(
            state.separation(pair),
            params.alpha(pair),
            params.beta(pair),
            params.exp_a(),
            params.exp_b(),
        )?;
        // r = q_j - q_i
        grad[j] += dw;
        grad[i] -= dw;
    }
    Ok(grad)
}

/// Hamilton's equations `q' = M^-1 p`, `p' = -grad W`.
pub fn cartesian_field(state: &CartesianState, params: &SystemParams) -> Result<CartesianState> {
    let m = params.masses();
    let grad = potential_gradient(&state.q, params)?;
    Ok(CartesianState {
        q: [0, 1, 2].map(|i| state.p[i] / m[i]),
        p: grad.map(|g| -g),
    })
}

/// Shift to the centre-of-mass frame with zero total momentum.
pub fn project_reduced(state: &CartesianState, params: &SystemParams) -> CartesianState {
    let m = params.masses();
    let total: f64 = m.iter().sum();
    let q_cm = (0..3).map(|i| m[i] * state.q[i]).sum::<f64>() / total;
    let p_tot: f64 = state.p.iter().sum();
    CartesianState {
        q: state.q.map(|q| q - q_cm),
        p: [0, 1, 2].map(|i| state.p[i] - m[i] * p_tot / total),
    }
}

/// The Cartesian flow as a [`VectorField`] on `(q, p)`.
pub struct CartesianFlow<'a> {
    pub params: &'a SystemParams,
}

impl VectorField<6> for CartesianFlow<'_> {
    fn eval(&self, x: &[f64; 6]) -> Result<[f64; 6]> {
        Ok(cartesian_field(&CartesianState::from_array(x), self.params)?.to_array())
    }

    fn chart(&self) -> Chart {
        Chart::Cartesian
    }

    fn energy_residual(&self, x: &[f64; 6]) -> f64 {
        hamiltonian_energy(&CartesianState::from_array(x), self.params)
            .map_or(f64::INFINITY, |e| (e - self.params.h()).abs())
    }
}
