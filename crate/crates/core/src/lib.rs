//! Finite-dimensional representations of the quantum algebra SU_q(2) in the
//! basis where `exp(tJ_z/2) J_x exp(tJ_z/2)` is diagonal.
//!
//! The algebra is reduced to the two-generator relation
//! `[s, r] = tanh t (s^2 - r^2 + 1)`; [`triangular_rep`] realises it by
//! lower-triangular matrices, [`casimir`] rebuilds the group-like generator
//! `R = exp(tH)` from `R K = (s^2 - r^2 + 1)/2`, and [`standard_rep`]
//! provides the conventional `J_z`-diagonal construction used as an oracle.
//! [`heisenberg`] and [`classical_limit`] check the functional realisation
//! and the `t -> 0` contraction.

pub mod casimir;
pub mod classical_limit;
pub mod error;
pub mod heisenberg;
pub mod qcore;
pub mod standard_rep;
pub mod triangular_rep;

pub use error::{Error, Result};
pub use qcore::{commutator, qnumber, rel_residual, Deformation, RealMatrix, Spin};
