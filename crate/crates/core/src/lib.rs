//! Simulation and gain-synthesis toolkit for an MR-clutch driven hydrostatic
//! actuator line.
//!
//! The crate covers the nonlinear plant model ([`plant`]), offline gain
//! computation ([`synthesis`]), discrete controllers ([`controllers`]), the
//! fixed-step simulator ([`sim`]) and the metric extraction used to compare
//! controllers ([`analysis`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod analysis;
pub mod config;
pub mod controllers;
pub mod error;
pub mod linalg;
pub mod plant;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result, SynthesisError};
