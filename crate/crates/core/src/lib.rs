//! Numerical laboratory relating nonlocal aggregation-diffusion (haptotaxis)
//! models to local Keller-Segel chemotaxis systems on periodic domains.
//!
//! The building blocks are layered bottom-up:
//!
//! - [`specfun`]: modified Bessel functions `K_nu` for Green functions.
//! - [`domain`]: periodic grids, fields, spectral convolution and norms.
//! - [`kernel`]: radial kernels and their lattice-sum periodisation.
//! - [`greens`]: periodic screened-Poisson Green functions and solves.
//! - [`fit`]: least-squares fitting of kernels by Green functions.
//! - [`pde`]: the nonlocal, parabolic-elliptic and parabolic-parabolic solvers.
//! - [`harness`]: configuration, experiments and the command line.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod fit;
pub mod greens;
pub mod harness;
pub mod kernel;
pub mod pde;
mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use quad::GaussLegendre;
