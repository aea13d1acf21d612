//! Bound states of the planar radial problem
//!
//! ```text
//! R'' + R'/xi - l^2/xi^2 R + alpha/xi R - xi^2 R + W R = 0
//! ```
//!
//! computed three ways: polynomial (truncated Frobenius) solutions, a
//! high-precision Rayleigh-Ritz diagonalization and a double-precision
//! finite-volume oracle. The `analysis` module ties them together.

// `!(x > 0.0)` is used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod frobenius;
pub mod model;
pub mod oracle;
pub mod precision;
pub mod ritz;

pub use error::{Error, Result};
pub use model::{PhysicalParams, ScaledModel};
pub use precision::Precision;
