//! Numerical tools for delayed non-local reaction-diffusion equations:
//! characteristic equations, spectral solvers for the linear and the
//! non-local KPP equation with delay, fundamental solutions and front tracking.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birth;
pub mod characteristic;
pub mod cli;
pub mod config;
pub mod dde;
pub mod fd_solver;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod fundamental;
pub mod kernels;
pub mod level_set;
pub mod linear_solver;
pub mod nonlinear_solver;
pub mod output;
pub mod quadrature;
pub mod roots;
pub mod verify;

pub use error::{Error, Result};
