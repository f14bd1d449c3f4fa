//! Numerical scattering theory for one-dimensional Schrodinger operators
//! `H = -d^2/dx^2 + sum_j c_j delta(x - y_j) + V_reg(x)`.
//!
//! Delta strengths follow the jump convention `u'(y+) - u'(y-) = c u(y)`,
//! so an attractive delta has `c < 0`. Generalized eigenfunctions solve
//! `H e = k^2 e` and time evolution uses the phase `exp(-i t k^2)`.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod jost;
pub(crate) mod ode;
pub mod potential;
pub mod scattering;
pub mod spectral;
pub mod verify;
pub mod wave_operators;

pub use error::{Error, Result};
pub use grid::{GridFunction, KQuadrature, UniformGrid};
pub use potential::{DeltaTerm, PotentialSpec, RegularKind, RegularPart};

pub type C64 = num_complex::Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
