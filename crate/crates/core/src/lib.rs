//! Constrained equilibria of reaction-diffusion inclusions
//! `-Δ(ρ∘u) ∈ φ(u)`, `u >= 0`, on finite-difference grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`exprfield`] parses piecewise vector fields `f`, `ρ`, `φ`;
//! * [`operators`] builds Dirichlet Laplacians, resolvents and `(λ₁, φ)`;
//! * [`cones`] holds the nonnegative-orthant geometry;
//! * [`setvalued`] turns fields into box-valued maps and builds tangent
//!   selections, ε-tangent approximations and separating fields;
//! * [`spectral`] computes `σ₊`, `s(D)` and existence certificates;
//! * [`degree`] runs the resolvent fixed-point solver, the degree formulas,
//!   the existence pipeline and a brute-force Brouwer-degree oracle.
//!
//! Loops over samples and multistarts go through [`par::map_indexed`], which
//! uses rayon with the default `parallel` feature and runs sequentially
//! without it.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::misnamed_getters,
    clippy::too_many_arguments
)]

pub mod banded;
pub mod cones;
pub mod degree;
pub mod error;
pub mod exprfield;
pub mod linalg;
pub mod operators;
pub mod par;
pub mod problem;
pub mod setvalued;
pub mod spectral;

pub use error::{Error, Result};
