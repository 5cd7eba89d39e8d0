//! Numerical laboratory for scalar conservation laws `∂t u + b(x, u)·∂x u = 0`
//! with irregular flux, with and without transport noise `σ ∂x u ∘ dW`.
//!
//! Modules, bottom up:
//! - [`flux`]: flux fields, mollification, divergence data, the capped
//!   square-root model and its two closed-form entropy solutions.
//! - [`kinetic`]: χ-functions, moment reconstruction, the gap `|f| − f²`,
//!   generalized kinetic validation and the commutator integral.
//! - [`solver_det`]: explicit upwind/viscous solver, defect measure,
//!   a-priori bound certificates, Kruzkov entropy residuals.
//! - [`stochastic`]: counter-based Brownian paths, the flow transformation
//!   and coupled Monte Carlo ensembles.
//! - [`dual_pde`]: heat-kernel norms, the backward dual equation, its
//!   Feynman–Kac representation and the associated certificates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod dual_pde;
pub mod error;
pub mod flux;
pub mod grid;
pub mod kinetic;
pub mod mollifier;
pub mod quadrature;
pub mod rng;
pub mod solver_det;
pub mod stochastic;
pub mod table;
pub mod testfn;

pub use error::{Error, KineticFlag, Result};
pub use grid::{Grid, GridFunction};
