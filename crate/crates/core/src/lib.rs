//! Radial ground states of the m-Laplacian Dirichlet-Neumann free boundary problem.
//!
//! The crate shoots for the central value `alpha` and the free boundary `R`, checks
//! the monotonicity identities along the computed profile and evaluates the sharp
//! Gagliardo-Nirenberg constant from the ground state.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod gn;
pub mod monitors;
pub mod nonlinearity;
pub mod numerics;
pub mod radial_ode;
pub mod shooting;

pub use error::{Error, Result};
