//! Minimal speeds of reaction-diffusion fronts, variational speed bounds
//! and their numerical verification.

// Negated comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod evolve;
pub mod numerics;
pub mod optimize;
pub mod oracle;
pub mod reaction;
pub mod verify;
