//! Numerical laboratory for the massive Dirac field on the exterior of a
//! Schwarzschild–anti-de Sitter black hole.
//!
//! After separation of the angular variables the field reduces to a family of
//! 1+1-dimensional channel Hamiltonians on the half-line `x < 0`, where `x` is
//! a shifted tortoise coordinate (`x → −∞` at the horizon, `x → 0⁻` at
//! conformal infinity). This crate discretises them and checks their
//! qualitative properties numerically: unitary evolution, boundary
//! behaviour, absence of eigenvalues, Mourre positivity, propagation at speed
//! one, existence of wave operators and the asymptotic velocity.
//!
//! Core numerics are generic over the scalar type via [`Real`]; the aliases
//! below fix `f64`, which the harness and command-line tool use.

pub mod algebra;
pub mod channel;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod ode;
pub mod scalar;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

/// Double-precision parameters.
pub type Params64 = geometry::Params<f64>;
/// Double-precision coordinate map.
pub type CoordinateMap64 = geometry::CoordinateMap<f64>;
/// Double-precision grid.
pub type Grid64 = grid::Grid<f64>;
/// Double-precision spinor field.
pub type SpinorField64 = grid::SpinorField<f64>;
/// Double-precision potentials.
pub type PotentialPair64 = channel::PotentialPair<f64>;
/// Double-precision channel operator.
pub type ChannelOperator64 = channel::ChannelOperator<f64>;
