//! Hyperbolic relaxation of compressible viscous flow: model assembly, 1D
//! finite-volume solvers, viscous shock profiles, Evans-function stability
//! and Godunov-variable structure checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evans;
pub mod experiment;
pub mod godunov;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod profiles;
pub mod sim1d;
pub mod thermo;

pub use error::{Error, Result};
