//! Sums of three positive cubes in arithmetic progressions.
//!
//! The crate tabulates r₃(n), evaluates complete cubic exponential sums and
//! local densities, computes the Euler-product constants that govern the
//! variance of r₃(n) over residue classes, and compares the empirical
//! variance against its predicted main terms.

pub mod arith;
pub mod cache;
pub mod config;
pub mod convolution;
pub mod cube_reps;
pub mod dirichlet;
pub mod error;
pub mod exp_sums;
pub mod identities;
pub mod local_densities;
pub mod main_terms;
pub mod report;
pub mod summation;
pub mod variance_lab;

pub use error::{Error, Result};
