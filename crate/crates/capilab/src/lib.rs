//! Numerical laboratory for capillary torsion potentials on cap-like domains
//! sitting on the boundary plane of the upper half-space.
//!
//! The library builds star-shaped cap domains (planar sections or rotationally
//! symmetric bodies), solves the mixed boundary value problem
//! `laplace(f) = 1` with `f = 0` on the free surface and a constant vertical
//! flux `c` on the flat base, and then evaluates the geometric functionals,
//! integral identities and stability deficits associated with that problem.
//! Everything downstream of the solver (reports, sweeps, studies) is
//! deterministic: identical inputs produce byte-identical output files.

pub mod error;
pub mod quad;
pub mod geometry;
pub mod meshgen;
pub mod linalg;
pub mod fem;
pub mod quantities;
pub mod experiments;
pub mod config;

pub use error::{Error, Result};
