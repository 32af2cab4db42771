//! Numerical lab for the restricted fractional Dirichlet Laplacian on
//! V-shaped waveguides.

// Guards are written `!(x > y)` on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extension;
pub mod fft;
pub mod fracform;
pub mod geometry;
pub mod lattice;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod theorems;

pub use error::{Error, Result};
