//! Commutator-based functional calculus for symmetric matrices, with the
//! logarithmic spin tensor and numerical checks of the identities around it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cli;
pub mod error;
pub mod kinematics;
pub mod matcore;
pub mod monotonicity;
pub mod par;
pub mod sample;
pub mod scalarfun;
pub mod verify;

pub use error::{Error, Result};
