//! Vector fields and chart transformations.
//!
//! Every field is paired with a first integral (or, for the reduced field, an
//! exact consistency identity) exposed together with its analytic gradient, so
//! that conservation can be checked as a pointwise identity.

mod mcgehee;
mod positive;
mod zero_energy;

pub use mcgehee::*;
pub use positive::*;
pub use zero_energy::*;

use crate::error::Result;
use crate::shape::ShapePotentials;

/// Tolerance on defining residuals for "on-manifold" membership.
pub const ON_MANIFOLD_TOL: f64 = 1e-8;

/// Regularized shape quantities at one `s`, shared by the regularized charts.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RegTerms {
    pub phi: f64,
    pub ureg: f64,
    pub ureg_d: f64,
    pub upr: f64,
    pub upr_d: f64,
    pub vreg: f64,
    pub vreg_d: f64,
    pub vpr: f64,
    pub vpr_d: f64,
}

impl RegTerms {
    pub fn at(pot: &ShapePotentials, s: f64) -> Result<Self> {
        let u = pot.regularized_u(s)?;
        let up = pot.regularized_u_prime(s)?;
        let v = pot.regularized_v(s)?;
        let vp = pot.regularized_v_prime(s)?;
        Ok(RegTerms {
            phi: 1.0 - s * s,
            ureg: u.value,
            ureg_d: u.deriv,
            upr: up.value,
            upr_d: up.deriv,
            vreg: v.value,
            vreg_d: v.deriv,
            vpr: vp.value,
            vpr_d: vp.deriv,
        })
    }

    /// `L = phi V~'/V~` and its derivative.
    pub fn log_v(&self) -> (f64, f64) {
        let l = self.vpr / self.vreg;
        (l, (self.vpr_d - l * self.vreg_d) / self.vreg)
    }
}

/// `phi^p` for `phi >= 0`, clamped at zero against roundoff.
pub(crate) fn phi_pow(phi: f64, p: f64) -> f64 {
    if phi <= 0.0 {
        0.0
    } else {
        phi.powf(p)
    }
}
