//! Periodic-parabolic vector-host epidemic model on an interval: IMEX
//! simulation, periodic orbits, principal eigenvalues of linearized periodic
//! problems, basic reproduction numbers and parameter sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod discretization;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod model;
pub mod periodic;
pub mod sampling;
pub mod solver;
pub mod spectral;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
