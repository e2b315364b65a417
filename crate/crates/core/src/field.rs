//! Autonomous vector fields on fixed-dimension phase spaces.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Coordinate system a state vector lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    Cartesian,
    McGehee,
    /// `(R, y, s, w)` at zero energy.
    ZeroEnergy,
    /// `(y, s, w)` with `R` slaved to the energy relation.
    Reduced,
    /// `(y, s, w)` on the infinity manifold `R = 0`.
    InfinityZero,
    /// `(Rt, vt, st, ut)` at positive energy.
    PositiveEnergy,
    /// `(vt, st, ut)` on `Rt = 0` at positive energy.
    InfinityPositive,
    Generic,
}

/// Independent variable of an integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clock {
    /// Physical time.
    T,
    /// McGehee time, `dt = r^(b/2+1) dtau`.
    Tau,
    /// Regularized time of the zero- and positive-energy charts.
    Sigma,
}

impl Clock {
    pub fn label(self) -> &'static str {
        match self {
            Clock::T => "t",
            Clock::Tau => "tau",
            Clock::Sigma => "sigma",
        }
    }
}

/// An autonomous vector field `x' = f(x)` on `R^N`.
///
/// Evaluation is fallible: states outside the chart's domain return
/// [`crate::Error::Domain`], which the integrator treats as a rejected step.
pub trait VectorField<const N: usize>: Sync {
    fn eval(&self, x: &[f64; N]) -> Result<[f64; N]>;

    fn chart(&self) -> Chart {
        Chart::Generic
    }

    fn clock(&self) -> Clock {
        Clock::T
    }

    /// Residual of the paired first integral, recorded with every sample.
    fn energy_residual(&self, _x: &[f64; N]) -> f64 {
        0.0
    }
}

/// Adapter turning a closure into a [`VectorField`].
pub struct FnField<F>(pub F);

impl<F, const N: usize> VectorField<N> for FnField<F>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]> + Sync,
{
    fn eval(&self, x: &[f64; N]) -> Result<[f64; N]> {
        (self.0)(x)
    }
}

/// The same field with time reversed.
pub struct Reversed<'a, V: ?Sized>(pub &'a V);

impl<V, const N: usize> VectorField<N> for Reversed<'_, V>
where
    V: VectorField<N> + ?Sized,
{
    fn eval(&self, x: &[f64; N]) -> Result<[f64; N]> {
        let mut d = self.0.eval(x)?;
        d.iter_mut().for_each(|v| *v = -*v);
        Ok(d)
    }

    fn chart(&self) -> Chart {
        self.0.chart()
    }

    fn clock(&self) -> Clock {
        self.0.clock()
    }

    fn energy_residual(&self, x: &[f64; N]) -> f64 {
        self.0.energy_residual(x)
    }
}

/// Directional derivative of a scalar function along a field, given its gradient.
pub fn directional_derivative<const N: usize>(grad: &[f64; N], field: &[f64; N]) -> f64 {
    grad.iter().zip(field).map(|(g, f)| g * f).sum()
}
