//! Numerical laboratory for the two-dimensional Lagrangian mean curvature
//! equation
//!
//! ```text
//! arctan λ₁ + arctan λ₂ = Θ(x),
//! ```
//!
//! where λ₁ ≥ λ₂ are the eigenvalues of the Hessian `D²u`.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! * [`grid`] – uniform square grids, finite-difference stencils up to third
//!   order, disk regions and midpoint quadrature.
//! * [`geometry`] – Hessian spectrum, induced metric `g = I + (D²u)²`, volume
//!   form, slope `b = log V`, second fundamental form and the metric
//!   differential operators.
//! * [`phase`] – admissible phase fields with analytic derivatives and the
//!   pointwise interpolation check.
//! * [`solver`] – the operator, its residuals and linearisation, and a damped
//!   Newton solver for the Dirichlet problem.
//! * [`estimates`] – field-level checks: Jacobi inequality, the doubling test
//!   function and its constant ledger, gradient estimate, volume bound and the
//!   cutoff functions it relies on.
//! * [`identities`] – grid-free certification of the frame identities and the
//!   one-variable arctan inequalities.
#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod estimates;
pub mod geometry;
pub mod grid;
pub mod identities;
pub mod phase;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use report::EstimateReport;
