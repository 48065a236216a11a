//! Numerical laboratory for monic polynomials orthogonal with respect to
//! the singularly perturbed Jacobi weight
//! `w(z) = (1 - z^2)^alpha exp(-t / (z^2 - k2))` on `[-1, 1]`.
//!
//! The crate builds the polynomials and their recurrence coefficients in
//! configurable precision ([`orthopoly`]), evaluates the ladder-operator
//! quantities `R_n, r_n, a_n, b_n` and the functions `A_n(z), B_n(z)`
//! ([`ladder`]), measures the residual of every identity that links them up
//! to the Painleve V equation for `Phi_n(t)` ([`verify`]), and integrates the
//! coupled Riccati system and Painleve V as initial value problems
//! ([`ode`]).

pub mod error;
pub mod ladder;
pub mod num;
pub mod ode;
pub mod orthopoly;
pub mod quadrature;
pub mod verify;
pub mod weight;

/// Working floating-point type; every value carries its own precision.
pub type Real = rug::Float;

pub use error::{Error, Result};
pub use ladder::LadderState;
pub use orthopoly::OrthoState;
pub use quadrature::PrecisionContext;
pub use weight::{ModelParams, Support};
