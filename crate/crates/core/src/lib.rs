//! Numerical tools for two-dimensional self-similar isentropic flow of
//! generalized polytropic gases.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod error;
pub mod field;
pub mod gas;
pub mod hodge;
pub mod linalg;
pub mod potential;
pub mod quasipotential;
pub mod regime;
pub mod stencil;
pub mod verify;
pub mod vorticity;

pub use error::{Error, Result};
