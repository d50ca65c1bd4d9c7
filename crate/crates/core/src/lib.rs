//! Numerical laboratory for sharp potential-type L²-Sobolev inequalities on
//! model manifolds.
//!
//! The crate computes best constants and their two-sided bounds, evaluates
//! closed-form extremal families and their equality residuals, minimizes the
//! associated constrained energy functionals on radial model manifolds, and
//! runs concentration/blow-up diagnostics on field families.
//!
//! Modules:
//! - [`potentials`]: positive homogeneous potentials F, G, maximizer sets,
//!   mollification, Brézis–Lieb constants and defects.
//! - [`manifolds`]: round sphere, flat torus and conformal sphere with radial
//!   grids, quadrature, Laplacian and curvature.
//! - [`constants`]: A₀(n), 𝒜₀(n,F), bounds for ℬ₀ and the dichotomy verdict.
//! - [`extremals`]: bubbles, the sphere extremal family, equality residuals.
//! - [`solver`]: constrained gradient descent, Euler–Lagrange residuals,
//!   existence prechecks and the local inequality check.
//! - [`concentration`]: ball-mass profiles, reverse-Hölder atoms, DGNM sup
//!   ratios, rescaling extraction.
//! - [`report`]: deterministic JSON/CSV emission.

pub mod concentration;
pub mod constants;
pub mod error;
pub mod extremals;
pub mod manifolds;
pub mod potentials;
pub mod report;
pub mod solver;

pub use error::{Error, Result};

/// Default radial grid resolution (intervals).
pub const DEFAULT_GRID_N: usize = 2048;
