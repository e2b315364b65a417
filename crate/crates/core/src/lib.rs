//! Escape dynamics of three particles on a line interacting through
//! attractive-repulsive power-law pair potentials.
//!
//! The crate follows an orbit through a stack of charts: Cartesian `(q, p)`,
//! McGehee `(r, v, s, u)`, the zero-energy regularized chart `(R, y, s, w)` and
//! the positive-energy chart `(R~, v~, s~, u~)`, in which infinity and binary
//! collisions become invariant boundary sets.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod integrate;
pub mod model;
pub mod shape;

pub use error::{Error, Result};
pub use field::VectorField;
pub use model::{CartesianState, Pair, SystemParams};
pub use shape::{MassGeometry, ShapePotentials};
