//! Finite-volume solver for the two-dimensional Euler equations with
//! low-Mach Roe-type fluxes, explicit Runge-Kutta and Adams-Bashforth time
//! stepping, and tools for linear stability analysis.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod config;
pub mod error;
pub mod grid;
pub mod integrators;
pub mod riemann;
pub mod run;
pub mod scheme;
pub mod stability;
pub mod state;

pub use error::{Error, Result, StateError};
